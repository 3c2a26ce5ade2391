#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>

#include "covfmm/experiment.hpp"
#include "covfmm/linalg.hpp"

using namespace covfmm;
using doctest::Approx;

namespace {

GridSpec tiny_grid(int lat_count, int lon_count) {
  GridSpec spec;
  spec.lat_count = lat_count;
  spec.lon_count = lon_count;
  return spec;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("default grid covers the rectangle row major, latitude outer") {
  const ObservationSet obs = generate_grid(GridSpec{});
  REQUIRE(obs.size() == 3456);
  CHECK(obs.lat_deg[0] == 54.0);
  CHECK(obs.lon_deg[0] == -6.0);
  CHECK(obs.lat_deg[3455] == 60.0);
  CHECK(obs.lon_deg[3455] == 6.0);
  // one row is 72 points of constant latitude
  for (int j = 0; j < 72; ++j) {
    CHECK(obs.lat_deg[static_cast<std::size_t>(j)] == 54.0);
    CHECK(obs.lon_deg[static_cast<std::size_t>(j)] ==
          Approx(-6.0 + 12.0 * j / 71.0).epsilon(1e-14));
  }
  CHECK(obs.lat_deg[72] == Approx(54.0 + 6.0 / 47.0).epsilon(1e-14));
  CHECK(obs.lon_deg[72] == -6.0);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    CHECK(obs.lat_deg[i] >= 54.0);
    CHECK(obs.lat_deg[i] <= 60.0);
    CHECK(obs.lon_deg[i] >= -6.0);
    CHECK(obs.lon_deg[i] <= 6.0);
  }
}

TEST_CASE("grid validation") {
  GridSpec spec;
  spec.lat_count = 1;
  CHECK_THROWS_AS(generate_grid(spec), ArgumentError);
  spec = GridSpec{};
  spec.lat_max = spec.lat_min;
  CHECK_THROWS_AS(generate_grid(spec), DomainError);
  spec = GridSpec{};
  spec.lon_min = 7.0;  // inverted range
  CHECK_THROWS_AS(generate_grid(spec), DomainError);
}

TEST_CASE("log rmse against hand-computed values") {
  Vector ref(2);
  ref << 10.0, 20.0;
  Vector got(2);
  got << 13.0, 24.0;  // errors 3 and 4: rmse = sqrt(25/2)
  const LogRmse r = log_rmse(got, ref);
  CHECK_FALSE(r.exact);
  CHECK(r.value == Approx(std::log10(std::sqrt(12.5))).epsilon(1e-15));

  const LogRmse same = log_rmse(ref, ref);
  CHECK(same.exact);

  Vector third(3);
  third << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(log_rmse(ref, third), ArgumentError);
  CHECK_THROWS_AS(log_rmse(Vector(), Vector()), ArgumentError);
}

TEST_CASE("innovation covariance adds the background term") {
  ObservationSet obs;
  obs.lat_deg = {54.0, 54.3, 55.0};
  obs.lon_deg = {-6.0, -5.5, -4.0};
  const CovarianceModel r = build_covariance(obs, CorrelationKind::Foar, 80.0, 1.5);
  const Matrix d = innovation_covariance(r, obs);
  REQUIRE(d.rows() == 3);
  for (Index i = 0; i < 3; ++i) {
    CHECK(d(i, i) == Approx(2.25 + 0.36).epsilon(1e-14));
    for (Index j = 0; j < 3; ++j) {
      const double dist =
          great_circle_distance(obs.lat_deg[static_cast<std::size_t>(i)],
                                obs.lon_deg[static_cast<std::size_t>(i)],
                                obs.lat_deg[static_cast<std::size_t>(j)],
                                obs.lon_deg[static_cast<std::size_t>(j)]);
      const double want =
          r.matrix(i, j) +
          0.36 * correlation_value(CorrelationKind::Soar, dist, 20.0);
      CHECK(d(i, j) == Approx(want).epsilon(1e-13));
      CHECK(d(i, j) == d(j, i));
    }
  }
}

TEST_CASE("departures are reproducible and follow the innovation covariance") {
  // small cluster, spacings of a few km so the background term correlates
  ObservationSet obs;
  obs.lat_deg = {54.00, 54.05, 54.10};
  obs.lon_deg = {-6.00, -6.00, -5.95};
  const CovarianceModel r = build_covariance(obs, CorrelationKind::Soar, 30.0);

  const std::vector<Vector> a = sample_departures(r, obs, 5, 42);
  const std::vector<Vector> b = sample_departures(r, obs, 5, 42);
  const std::vector<Vector> c = sample_departures(r, obs, 5, 43);
  REQUIRE(a.size() == 5);
  for (std::size_t k = 0; k < 5; ++k) {
    REQUIRE(a[k].size() == 3);
    for (Index i = 0; i < 3; ++i) CHECK(a[k][i] == b[k][i]);
  }
  bool any_difference = false;
  for (std::size_t k = 0; k < 5; ++k)
    for (Index i = 0; i < 3; ++i) any_difference |= (a[k][i] != c[k][i]);
  CHECK(any_difference);

  // Monte Carlo second moments match innovation_covariance
  const int n = 200000;
  const std::vector<Vector> draws = sample_departures(r, obs, n, 7);
  Matrix moment = Matrix::Zero(3, 3);
  for (const Vector& d : draws) moment += d * d.transpose();
  moment /= static_cast<double>(n);
  const Matrix want = innovation_covariance(r, obs);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j)
      CHECK(moment(i, j) == Approx(want(i, j)).epsilon(0.05));

  CHECK_THROWS_AS(sample_departures(r, obs, 0, 1), ArgumentError);
}

TEST_CASE("observation removal keeps order and hits the exact count") {
  const ObservationSet obs = generate_grid(GridSpec{});
  const ObservationSet kept = remove_observations(obs, 0.25, 99);
  CHECK(kept.size() == 3456 - 864);

  // survivors form a subsequence of the original scan order
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    while (cursor < obs.size() &&
           (obs.lat_deg[cursor] != kept.lat_deg[i] ||
            obs.lon_deg[cursor] != kept.lon_deg[i]))
      ++cursor;
    REQUIRE(cursor < obs.size());
    ++cursor;
  }

  const ObservationSet again = remove_observations(obs, 0.25, 99);
  CHECK(again.lat_deg == kept.lat_deg);
  const ObservationSet other = remove_observations(obs, 0.25, 100);
  CHECK(other.lat_deg != kept.lat_deg);

  const ObservationSet all = remove_observations(obs, 0.0, 5);
  CHECK(all.size() == obs.size());
  CHECK(all.lat_deg == obs.lat_deg);

  CHECK_THROWS_AS(remove_observations(obs, -0.1, 1), ArgumentError);
  CHECK_THROWS_AS(remove_observations(obs, 1.0, 1), ArgumentError);
}

TEST_CASE("observation cost halves the quadratic form") {
  ObservationSet obs;
  for (int i = 0; i < 64; ++i) {
    obs.lat_deg.push_back(54.0 + 0.75 * (i / 8));
    obs.lon_deg.push_back(-6.0 + 1.5 * (i % 8));
  }
  const CovarianceModel r = build_covariance(obs, CorrelationKind::Soar, 80.0);
  const Matrix a = inverse_weighting(recondition_rr(r, 1000.0)).matrix;
  const FmmPlan plan = plan_build(a, build_tree(obs, 3), 8);
  RandomStream rng(split_seed(3));
  Vector d(64);
  for (Index i = 0; i < 64; ++i) d[i] = rng.normal();
  const double want = 0.5 * d.dot(apply_dense_oracle(a, d));
  CHECK(observation_cost(plan, d) == Approx(want).epsilon(1e-10));
  CHECK(observation_cost(plan, Vector::Zero(64)) == 0.0);
}

TEST_CASE("family seeds are distinct and stable") {
  std::set<std::uint64_t> seen;
  for (std::size_t k = 0; k < 32; ++k) seen.insert(family_seed(12345, k));
  CHECK(seen.size() == 32);
  CHECK(family_seed(12345, 0) == family_seed(12345, 0));
  CHECK(family_seed(12345, 0) != family_seed(12346, 0));
}

TEST_CASE("scenario text parsing applies defaults then overrides") {
  const ExperimentScenario sc = parse_scenario_text(
      "# comment\n"
      "scenario = rank_sweep\n"
      "rank_max = 4\n"
      "realizations = 7\n"
      "lat_count = 12\n"
      "lon_count = 18\n"
      "seed = 77\n");
  CHECK(sc.kind == ScenarioKind::RankSweep);
  CHECK(sc.rank_min == 1);
  CHECK(sc.rank_max == 4);
  CHECK(sc.realizations == 7);
  CHECK(sc.grid.lat_count == 12);
  CHECK(sc.grid.lon_count == 18);
  CHECK(sc.seed == 77);
  // rank sweep roster: both autoregressive kinds at 80 km
  REQUIRE(sc.correlations.size() == 2);
  CHECK(sc.correlations[0] == CorrelationKind::Foar);
  CHECK(sc.correlations[1] == CorrelationKind::Soar);
  CHECK(sc.lengthscales_km == std::vector<double>{80.0});
  CHECK(sc.methods.empty());
  CHECK(sc.missing_fractions.empty());

  const ExperimentScenario lists = parse_scenario_text(
      "scenario = missing_obs\n"
      "missing_fractions = 0.0, 0.10, 0.25\n"
      "correlations = soar\n");
  CHECK(lists.kind == ScenarioKind::MissingObs);
  CHECK(lists.missing_fractions == std::vector<double>{0.0, 0.10, 0.25});
  REQUIRE(lists.correlations.size() == 1);

  CHECK_THROWS_AS(parse_scenario_text("rank_max = 4\n"), ArgumentError);
  CHECK_THROWS_AS(parse_scenario_text("scenario = rank_sweep\nbogus = 1\n"),
                  ArgumentError);
  CHECK_THROWS_AS(parse_scenario_text("scenario = quantum\n"), ArgumentError);
  CHECK_THROWS_AS(
      parse_scenario_text("scenario = rank_sweep\nrank_max = x\n"),
      ArgumentError);
}

TEST_CASE("every scenario kind has parseable defaults") {
  for (ScenarioKind kind :
       {ScenarioKind::RankSweep, ScenarioKind::LengthscaleSweep,
        ScenarioKind::ReconditionCompare, ScenarioKind::CorrelationCompare,
        ScenarioKind::MissingObs}) {
    const ExperimentScenario sc = default_scenario(kind);
    CHECK(sc.kind == kind);
    CHECK(scenario_kind_from(to_string(kind)) == kind);
    const ExperimentScenario parsed =
        parse_scenario_text("scenario = " + to_string(kind) + "\n");
    CHECK(parsed.correlations == sc.correlations);
    CHECK(parsed.lengthscales_km == sc.lengthscales_km);
    CHECK(parsed.kappas == sc.kappas);
    CHECK(parsed.realizations == sc.realizations);
  }
  CHECK(default_scenario(ScenarioKind::ReconditionCompare).kappas ==
        std::vector<double>{1000.0, 2000.0, 3000.0});
  CHECK(default_scenario(ScenarioKind::LengthscaleSweep).lengthscales_km ==
        std::vector<double>{80.0, 160.0, 240.0});
}

TEST_CASE("a tiny sweep runs deterministically end to end") {
  ExperimentScenario sc = default_scenario(ScenarioKind::RankSweep);
  sc.grid = tiny_grid(10, 12);
  sc.correlations = {CorrelationKind::Soar};
  sc.rank_min = 1;
  sc.rank_max = 3;
  sc.realizations = 4;
  sc.seed = 2024;

  const std::vector<ResultRow> rows = run_scenario(sc);
  REQUIRE(rows.size() == 3);  // one family, three ranks
  for (int k = 0; k < 3; ++k) {
    const ResultRow& row = rows[static_cast<std::size_t>(k)];
    CHECK(row.rank == k + 1);
    CHECK(row.scenario == "rank_sweep");
    CHECK(row.family == "soar_l80");
    CHECK(row.correlation == CorrelationKind::Soar);
    CHECK(row.lengthscale_km == 80.0);
    CHECK(row.realizations == 4);
    CHECK(row.seed == family_seed(2024, 0));
    CHECK(row.wall_seconds >= 0.0);
    CHECK(std::isfinite(row.mean_log_rmse));
    CHECK(std::isfinite(row.stderr_log_rmse));
    CHECK(row.exact_count == 0);
    CHECK(row.stderr_log_rmse >= 0.0);
  }
  // higher rank tracks the dense product more closely on average
  CHECK(rows[2].mean_log_rmse < rows[0].mean_log_rmse);

  // byte-for-byte reproducibility of the report
  const std::string csv1 = results_csv(rows);
  const std::string csv2 = results_csv(run_scenario(sc));
  CHECK(csv1 == csv2);
  CHECK(csv1.rfind("scenario,family,correlation,lengthscale_km,recondition,"
                   "kappa,missing_fraction,rank,realizations,seed,"
                   "mean_log10_rmse,log10_mean_rmse,stderr_log10_rmse,"
                   "exact_count\n",
                   0) == 0);
  // timing column only on request
  const std::string timed = results_csv(rows, true);
  CHECK(timed.find("exact_count,wall_seconds\n") != std::string::npos);
}

TEST_CASE("missing observation sweeps shrink the grid per family") {
  ExperimentScenario sc = default_scenario(ScenarioKind::MissingObs);
  sc.grid = tiny_grid(10, 12);
  sc.correlations = {CorrelationKind::Soar};
  sc.rank_min = 2;
  sc.rank_max = 2;
  sc.realizations = 2;
  sc.missing_fractions = {0.0, 0.25};
  sc.seed = 5;
  const std::vector<ResultRow> rows = run_scenario(sc);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].missing_fraction == 0.0);
  CHECK(rows[1].missing_fraction == 0.25);
  CHECK(rows[0].family == "soar_l80");  // no suffix when nothing is removed
  CHECK(rows[1].family == "soar_l80_miss25");
  for (const ResultRow& row : rows) CHECK(std::isfinite(row.mean_log_rmse));
}

}  // TEST_SUITE
