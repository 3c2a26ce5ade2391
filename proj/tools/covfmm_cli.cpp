#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "covfmm/box_tree.hpp"
#include "covfmm/cost_model.hpp"
#include "covfmm/covariance.hpp"
#include "covfmm/experiment.hpp"
#include "covfmm/fmm_plan.hpp"
#include "covfmm/io.hpp"

namespace {

using namespace covfmm;

void run_grid(const GridSpec& spec, const std::string& output) {
  save_observations_csv(generate_grid(spec), output);
}

void run_build_cov(const std::string& obs_path, const std::string& kind,
                   double lengthscale, double stddev, const std::string& output) {
  const ObservationSet obs = load_observations_csv(obs_path);
  save_covariance(
      build_covariance(obs, correlation_kind_from(kind), lengthscale, stddev),
      output);
}

void run_recondition(const std::string& input, const std::string& method,
                     double kappa, const std::string& output) {
  const CovarianceModel model = load_covariance(input);
  const ReconditionMethod m = recondition_method_from(method);
  CovarianceModel out;
  if (m == ReconditionMethod::RidgeRegression)
    out = recondition_rr(model, kappa);
  else if (m == ReconditionMethod::MinimumEigenvalue)
    out = recondition_me(model, kappa);
  else
    throw ArgumentError("recondition: method must be rr or me");
  save_covariance(out, output);
}

void run_invert(const std::string& input, const std::string& output) {
  save_covariance(inverse_weighting(load_covariance(input)), output);
}

void run_plan(const std::string& cov_path, const std::string& obs_path, int rank,
              int levels, bool two_svd, bool tree_summary,
              const std::string& output) {
  const CovarianceModel a = load_covariance(cov_path);
  if (!a.inverse)
    throw ArgumentError("plan: the covariance must be inverted first (see `invert`)");
  const ObservationSet obs = load_observations_csv(obs_path);
  const int depth = levels > 0 ? levels : suggest_levels(obs.size());
  const BoxTree tree = build_tree(obs, depth);
  if (tree_summary) std::cout << tree.summary();
  save_plan(plan_build(a.matrix, tree, rank, !two_svd), output);
}

void run_apply(const std::string& plan_path, const std::string& vector_path,
               bool print_cost, const std::string& output) {
  const FmmPlan plan = load_plan(plan_path);
  const Vector d = load_vector_csv(vector_path);
  save_vector_csv(apply(plan, d), output);
  if (print_cost)
    std::cout << format_double(observation_cost(plan, d)) << '\n';
}

void run_cost_model(const MachineParams& params, const std::string& output) {
  const std::string csv = cost_csv(params);
  if (output.empty())
    std::cout << csv;
  else
    write_text_file(output, csv);
}

void run_experiment(const std::string& config, std::optional<std::uint64_t> seed,
                    bool with_timings, const std::string& output) {
  ExperimentScenario sc = parse_scenario_file(config);
  if (seed) sc.seed = *seed;
  const std::string csv = results_csv(run_scenario(sc), with_timings);
  if (output.empty())
    std::cout << csv;
  else
    write_text_file(output, csv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"inverse observation-error covariance products, tree accelerated"};
  app.require_subcommand(1);

  // accepted everywhere for a uniform interface; only sampling commands use it
  std::uint64_t seed = 0;
  bool seed_given = false;

  GridSpec grid;
  std::string out_path, obs_path, cov_path, plan_path, vec_path, config_path;
  std::string kind = "soar", method;
  double lengthscale = 80.0, stddev = 1.0, kappa = 0.0;
  int rank = 10, levels = 0;
  bool two_svd = false, tree_summary = false, print_cost = false,
       with_timings = false;
  MachineParams mp;
  mp.workers = 64.0;
  mp.rank = 10.0;
  mp.observations = 3456.0;
  mp.leaf_occupancy = 0.0;

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "random seed")->each([&](const std::string&) {
      seed_given = true;
    });
  };

  CLI::App* grid_cmd = app.add_subcommand("grid", "write a regular observation grid");
  grid_cmd->add_option("--lat-min", grid.lat_min, "southern edge, degrees");
  grid_cmd->add_option("--lat-max", grid.lat_max, "northern edge, degrees");
  grid_cmd->add_option("--lon-min", grid.lon_min, "western edge, degrees");
  grid_cmd->add_option("--lon-max", grid.lon_max, "eastern edge, degrees");
  grid_cmd->add_option("--lat-count", grid.lat_count, "latitudes");
  grid_cmd->add_option("--lon-count", grid.lon_count, "longitudes");
  grid_cmd->add_option("--output", out_path, "observation CSV path")->required();
  add_seed(grid_cmd);
  grid_cmd->callback([&] { run_grid(grid, out_path); });

  CLI::App* cov_cmd = app.add_subcommand("build-cov", "build a covariance matrix");
  cov_cmd->add_option("--obs", obs_path, "observation CSV")->required();
  cov_cmd->add_option("--kind", kind, "gaussian | foar | soar | matern52");
  cov_cmd->add_option("--lengthscale", lengthscale, "correlation lengthscale, km");
  cov_cmd->add_option("--stddev", stddev, "uniform standard deviation");
  cov_cmd->add_option("--output", out_path, "covariance container path")->required();
  add_seed(cov_cmd);
  cov_cmd->callback(
      [&] { run_build_cov(obs_path, kind, lengthscale, stddev, out_path); });

  CLI::App* rec_cmd = app.add_subcommand("recondition", "cap the condition number");
  rec_cmd->add_option("--input", cov_path, "covariance container")->required();
  rec_cmd->add_option("--method", method, "rr | me")->required();
  rec_cmd->add_option("--kappa", kappa, "target condition number")->required();
  rec_cmd->add_option("--output", out_path, "covariance container path")->required();
  add_seed(rec_cmd);
  rec_cmd->callback([&] { run_recondition(cov_path, method, kappa, out_path); });

  CLI::App* inv_cmd = app.add_subcommand("invert", "invert a covariance matrix");
  inv_cmd->add_option("--input", cov_path, "covariance container")->required();
  inv_cmd->add_option("--output", out_path, "covariance container path")->required();
  add_seed(inv_cmd);
  inv_cmd->callback([&] { run_invert(cov_path, out_path); });

  CLI::App* plan_cmd = app.add_subcommand("plan", "factor an inverse covariance");
  plan_cmd->add_option("--cov", cov_path, "inverted covariance container")->required();
  plan_cmd->add_option("--obs", obs_path, "observation CSV")->required();
  plan_cmd->add_option("--rank", rank, "singular vectors kept per box");
  plan_cmd->add_option("--levels", levels, "tree depth, 0 picks automatically");
  plan_cmd->add_flag("--two-svd", two_svd,
                     "factor source and target sides separately");
  plan_cmd->add_flag("--tree-summary", tree_summary,
                     "print per-box occupancy to stdout");
  plan_cmd->add_option("--output", out_path, "plan container path")->required();
  add_seed(plan_cmd);
  plan_cmd->callback([&] {
    run_plan(cov_path, obs_path, rank, levels, two_svd, tree_summary, out_path);
  });

  CLI::App* apply_cmd = app.add_subcommand("apply", "multiply a plan by a vector");
  apply_cmd->add_option("--plan", plan_path, "plan container")->required();
  apply_cmd->add_option("--vector", vec_path, "departure CSV, one value per line")
      ->required();
  apply_cmd->add_flag("--print-cost", print_cost,
                      "print the quadratic penalty to stdout");
  apply_cmd->add_option("--output", out_path, "product CSV path")->required();
  add_seed(apply_cmd);
  apply_cmd->callback([&] { run_apply(plan_path, vec_path, print_cost, out_path); });

  CLI::App* cost_cmd = app.add_subcommand("cost-model", "print the communication table");
  cost_cmd->add_option("--ts", mp.startup_time, "startup seconds per message")
      ->required();
  cost_cmd->add_option("--tw", mp.word_time, "seconds per transferred word")
      ->required();
  cost_cmd->add_option("--workers", mp.workers, "worker count");
  cost_cmd->add_option("--rank", mp.rank, "singular vectors per box");
  cost_cmd->add_option("--observations", mp.observations, "observation count");
  cost_cmd->add_option("--occupancy", mp.leaf_occupancy,
                       "mean leaf occupancy, 0 derives observations/workers");
  cost_cmd->add_option("--output", out_path, "CSV path, stdout when omitted");
  add_seed(cost_cmd);
  cost_cmd->callback([&] {
    if (mp.leaf_occupancy == 0.0 && mp.workers > 0.0)
      mp.leaf_occupancy = mp.observations / mp.workers;
    run_cost_model(mp, out_path);
  });

  CLI::App* exp_cmd = app.add_subcommand("experiment", "run a scenario sweep");
  exp_cmd->add_option("--config", config_path, "key = value scenario file")
      ->required();
  exp_cmd->add_flag("--with-timings", with_timings,
                    "append a wall-clock column (breaks reproducibility)");
  exp_cmd->add_option("--output", out_path, "results CSV path, stdout when omitted");
  add_seed(exp_cmd);
  exp_cmd->callback([&] {
    run_experiment(config_path,
                   seed_given ? std::optional<std::uint64_t>(seed) : std::nullopt,
                   with_timings, out_path);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const covfmm::ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const covfmm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
