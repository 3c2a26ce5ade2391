#include "covfmm/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

#include "covfmm/io.hpp"
#include "covfmm/linalg.hpp"
#include "covfmm/random.hpp"

namespace covfmm {

namespace {

// background term added to every sampled departure: sigma 0.6, 20 km SOAR
constexpr double kBackgroundStddev = 0.6;
constexpr double kBackgroundLengthscaleKm = 20.0;

constexpr std::uint64_t kFamilySalt = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kDepartureSalt = 0xBF58476D1CE4E5B9ull;
constexpr std::uint64_t kRemovalSalt = 0x52454D4Full;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct Family {
  CorrelationKind correlation;
  double lengthscale_km;
  ReconditionMethod method;
  double kappa;
  double missing_fraction;
};

std::string family_label(const Family& f) {
  std::string label = to_string(f.correlation) + "_l" + format_double(f.lengthscale_km);
  if (f.method != ReconditionMethod::None)
    label += "_" + to_string(f.method) + format_double(f.kappa);
  if (f.missing_fraction > 0.0)
    label += "_miss" + format_double(f.missing_fraction * 100.0);
  return label;
}

void validate_scenario(const ExperimentScenario& sc) {
  if (sc.correlations.empty())
    throw ArgumentError("scenario: no correlation kinds");
  if (sc.lengthscales_km.empty())
    throw ArgumentError("scenario: no lengthscales");
  for (double l : sc.lengthscales_km)
    if (!(l > 0.0)) throw ArgumentError("scenario: lengthscales must be positive");
  bool any_recondition = false;
  for (ReconditionMethod m : sc.methods)
    if (m != ReconditionMethod::None) any_recondition = true;
  if (any_recondition && sc.kappas.empty())
    throw ArgumentError("scenario: reconditioning methods need kappa values");
  for (double f : sc.missing_fractions)
    if (!(f >= 0.0) || f > 0.25)
      throw ArgumentError("scenario: missing fractions must lie in [0, 0.25]");
  if (sc.rank_min < 1 || sc.rank_max < sc.rank_min)
    throw ArgumentError("scenario: bad rank range");
  if (sc.realizations < 1)
    throw ArgumentError("scenario: need at least one realization");
  if (sc.levels != 0 && (sc.levels < 3 || sc.levels > 15))
    throw ArgumentError("scenario: levels must be 0 (auto) or in [3, 15]");
}

std::vector<Family> expand_families(const ExperimentScenario& sc) {
  std::vector<std::pair<ReconditionMethod, double>> treatments;
  if (sc.methods.empty()) {
    treatments.emplace_back(ReconditionMethod::None, 0.0);
  } else {
    for (ReconditionMethod m : sc.methods) {
      if (m == ReconditionMethod::None)
        treatments.emplace_back(m, 0.0);
      else
        for (double k : sc.kappas) treatments.emplace_back(m, k);
    }
  }
  std::vector<double> fractions = sc.missing_fractions;
  if (fractions.empty()) fractions.push_back(0.0);

  std::vector<Family> out;
  for (CorrelationKind kind : sc.correlations)
    for (double l : sc.lengthscales_km)
      for (const auto& [method, kappa] : treatments)
        for (double f : fractions) out.push_back({kind, l, method, kappa, f});
  return out;
}

double rmse_of(const Vector& q, const Vector& q_ref) {
  if (q.size() != q_ref.size()) throw ArgumentError("log_rmse: length mismatch");
  if (q.size() == 0) throw ArgumentError("log_rmse: empty vectors");
  double sum = 0.0;
  for (Index i = 0; i < q.size(); ++i) {
    const double diff = q[i] - q_ref[i];
    sum += diff * diff;
  }
  return std::sqrt(sum / static_cast<double>(q.size()));
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double_field(const std::string& text, const std::string& key) {
  double v = 0.0;
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), last, v);
  if (ec != std::errc() || ptr != last)
    throw ArgumentError("scenario: cannot parse number '" + text + "' for " + key);
  return v;
}

long parse_int_field(const std::string& text, const std::string& key) {
  long v = 0;
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), last, v);
  if (ec != std::errc() || ptr != last)
    throw ArgumentError("scenario: cannot parse integer '" + text + "' for " + key);
  return v;
}

std::uint64_t parse_seed_field(const std::string& text, const std::string& key) {
  std::uint64_t v = 0;
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), last, v);
  if (ec != std::errc() || ptr != last)
    throw ArgumentError("scenario: cannot parse seed '" + text + "' for " + key);
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    const std::string item =
        trim(comma == std::string::npos ? text.substr(start)
                                        : text.substr(start, comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) return out;
    start = comma + 1;
  }
}

std::vector<double> parse_double_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  for (const std::string& item : split_list(text))
    out.push_back(parse_double_field(item, key));
  if (out.empty()) throw ArgumentError("scenario: empty list for " + key);
  return out;
}

}  // namespace

ObservationSet generate_grid(const GridSpec& spec) {
  if (spec.lat_count < 2 || spec.lon_count < 2)
    throw ArgumentError("generate_grid: counts must be at least 2");
  for (double v : {spec.lat_min, spec.lat_max, spec.lon_min, spec.lon_max})
    if (!std::isfinite(v)) throw DomainError("generate_grid: non-finite range");
  const double dlat = spec.lat_max - spec.lat_min;
  const double dlon = spec.lon_max - spec.lon_min;
  if (!(dlat > 0.0) || !(dlon > 0.0))
    throw DomainError("generate_grid: degenerate range");

  ObservationSet obs;
  const std::size_t m =
      static_cast<std::size_t>(spec.lat_count) * static_cast<std::size_t>(spec.lon_count);
  obs.lat_deg.reserve(m);
  obs.lon_deg.reserve(m);
  for (int i = 0; i < spec.lat_count; ++i) {
    // clamp so rounding can never push an endpoint outside the stated range
    const double lat = std::min(
        spec.lat_max, spec.lat_min + dlat * i / static_cast<double>(spec.lat_count - 1));
    for (int j = 0; j < spec.lon_count; ++j) {
      const double lon = std::min(
          spec.lon_max, spec.lon_min + dlon * j / static_cast<double>(spec.lon_count - 1));
      obs.lat_deg.push_back(lat);
      obs.lon_deg.push_back(lon);
    }
  }
  return obs;
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::RankSweep: return "rank_sweep";
    case ScenarioKind::LengthscaleSweep: return "lengthscale_sweep";
    case ScenarioKind::ReconditionCompare: return "recondition_compare";
    case ScenarioKind::CorrelationCompare: return "correlation_compare";
    case ScenarioKind::MissingObs: return "missing_obs";
  }
  throw ArgumentError("unknown scenario kind");
}

ScenarioKind scenario_kind_from(const std::string& name) {
  for (ScenarioKind k :
       {ScenarioKind::RankSweep, ScenarioKind::LengthscaleSweep,
        ScenarioKind::ReconditionCompare, ScenarioKind::CorrelationCompare,
        ScenarioKind::MissingObs})
    if (to_string(k) == name) return k;
  throw ArgumentError("unknown scenario kind '" + name + "'");
}

ExperimentScenario default_scenario(ScenarioKind kind) {
  ExperimentScenario sc;
  sc.kind = kind;
  sc.correlations = {CorrelationKind::Soar};
  sc.lengthscales_km = {80.0};
  switch (kind) {
    case ScenarioKind::RankSweep:
      sc.correlations = {CorrelationKind::Foar, CorrelationKind::Soar};
      break;
    case ScenarioKind::LengthscaleSweep:
      sc.lengthscales_km = {80.0, 160.0, 240.0};
      break;
    case ScenarioKind::ReconditionCompare:
      sc.methods = {ReconditionMethod::RidgeRegression,
                    ReconditionMethod::MinimumEigenvalue};
      sc.kappas = {1000.0, 2000.0, 3000.0};
      break;
    case ScenarioKind::CorrelationCompare:
      sc.correlations = {CorrelationKind::Gaussian, CorrelationKind::Foar,
                         CorrelationKind::Soar, CorrelationKind::Matern52};
      sc.methods = {ReconditionMethod::RidgeRegression};
      sc.kappas = {1000.0};
      break;
    case ScenarioKind::MissingObs:
      sc.missing_fractions = {0.0, 0.10, 0.25};
      break;
  }
  return sc;
}

ExperimentScenario parse_scenario_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::istringstream is(text);
  std::string raw;
  while (std::getline(is, raw)) {
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ArgumentError("scenario: expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ArgumentError("scenario: empty key or value in '" + line + "'");
    pairs.emplace_back(key, value);
  }

  ScenarioKind kind = ScenarioKind::RankSweep;
  bool have_kind = false;
  for (const auto& [key, value] : pairs)
    if (key == "scenario") {
      kind = scenario_kind_from(value);
      have_kind = true;
    }
  if (!have_kind) throw ArgumentError("scenario: missing 'scenario' key");

  ExperimentScenario sc = default_scenario(kind);
  for (const auto& [key, value] : pairs) {
    if (key == "scenario") {
      continue;
    } else if (key == "correlations") {
      sc.correlations.clear();
      for (const std::string& item : split_list(value))
        sc.correlations.push_back(correlation_kind_from(item));
    } else if (key == "lengthscales_km") {
      sc.lengthscales_km = parse_double_list(value, key);
    } else if (key == "methods") {
      sc.methods.clear();
      for (const std::string& item : split_list(value))
        sc.methods.push_back(recondition_method_from(item));
    } else if (key == "kappas") {
      sc.kappas = parse_double_list(value, key);
    } else if (key == "missing_fractions") {
      sc.missing_fractions = parse_double_list(value, key);
    } else if (key == "rank_min") {
      sc.rank_min = static_cast<int>(parse_int_field(value, key));
    } else if (key == "rank_max") {
      sc.rank_max = static_cast<int>(parse_int_field(value, key));
    } else if (key == "realizations") {
      sc.realizations = static_cast<int>(parse_int_field(value, key));
    } else if (key == "levels") {
      sc.levels = static_cast<int>(parse_int_field(value, key));
    } else if (key == "seed") {
      sc.seed = parse_seed_field(value, key);
    } else if (key == "lat_min") {
      sc.grid.lat_min = parse_double_field(value, key);
    } else if (key == "lat_max") {
      sc.grid.lat_max = parse_double_field(value, key);
    } else if (key == "lon_min") {
      sc.grid.lon_min = parse_double_field(value, key);
    } else if (key == "lon_max") {
      sc.grid.lon_max = parse_double_field(value, key);
    } else if (key == "lat_count") {
      sc.grid.lat_count = static_cast<int>(parse_int_field(value, key));
    } else if (key == "lon_count") {
      sc.grid.lon_count = static_cast<int>(parse_int_field(value, key));
    } else {
      throw ArgumentError("scenario: unknown key '" + key + "'");
    }
  }
  validate_scenario(sc);
  return sc;
}

ExperimentScenario parse_scenario_file(const std::string& path) {
  return parse_scenario_text(read_text_file(path));
}

LogRmse log_rmse(const Vector& q, const Vector& q_ref) {
  const double rmse = rmse_of(q, q_ref);
  if (rmse == 0.0) return {0.0, true};
  return {std::log10(rmse), false};
}

Matrix innovation_covariance(const CovarianceModel& r, const ObservationSet& obs) {
  if (r.inverse)
    throw ArgumentError("innovation_covariance: pass the covariance, not its inverse");
  if (r.matrix.rows() != static_cast<Index>(obs.size()))
    throw ArgumentError("innovation_covariance: model/observation size mismatch");
  const CovarianceModel background = build_covariance(
      obs, CorrelationKind::Soar, kBackgroundLengthscaleKm, kBackgroundStddev);
  return r.matrix + background.matrix;
}

std::vector<Vector> sample_departures(const CovarianceModel& r,
                                      const ObservationSet& obs, int n,
                                      std::uint64_t seed) {
  if (n < 1) throw ArgumentError("sample_departures: need at least one draw");
  const Matrix cov = innovation_covariance(r, obs);
  RandomStream rng(split_seed(seed ^ kDepartureSalt));
  const Matrix draws = chol_sample(cov, rng, n);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(n));
  for (Index c = 0; c < n; ++c) out.emplace_back(draws.col(c));
  return out;
}

ObservationSet remove_observations(const ObservationSet& obs, double fraction,
                                   std::uint64_t seed) {
  if (!(fraction >= 0.0) || fraction >= 1.0)
    throw ArgumentError("remove_observations: fraction must be in [0, 1)");
  const std::size_t m = obs.size();
  if (m == 0) throw ArgumentError("remove_observations: empty observation set");
  if (obs.lon_deg.size() != m)
    throw ArgumentError("remove_observations: lat/lon length mismatch");
  const auto removed =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(m)));
  if (removed == 0) return obs;
  if (removed >= m)
    throw ArgumentError("remove_observations: nothing would survive");

  // partial Fisher-Yates; the first `removed` entries are the victims
  std::vector<std::uint32_t> order(m);
  std::iota(order.begin(), order.end(), 0u);
  RandomStream rng(seed);
  for (std::size_t i = 0; i < removed; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(m - i));
    std::swap(order[i], order[j]);
  }
  std::vector<char> gone(m, 0);
  for (std::size_t i = 0; i < removed; ++i) gone[order[i]] = 1;

  ObservationSet out;
  out.lat_deg.reserve(m - removed);
  out.lon_deg.reserve(m - removed);
  for (std::size_t i = 0; i < m; ++i) {
    if (gone[i]) continue;
    out.lat_deg.push_back(obs.lat_deg[i]);
    out.lon_deg.push_back(obs.lon_deg[i]);
  }
  return out;
}

double observation_cost(const FmmPlan& plan, const Vector& d) {
  const Vector q = apply(plan, d);
  double acc = 0.0;
  for (Index i = 0; i < d.size(); ++i) acc += d[i] * q[i];
  return 0.5 * acc;
}

std::uint64_t family_seed(std::uint64_t scenario_seed, std::size_t family_index) {
  return split_seed(scenario_seed ^
                    ((static_cast<std::uint64_t>(family_index) + 1) * kFamilySalt));
}

std::vector<ResultRow> run_scenario(const ExperimentScenario& sc) {
  validate_scenario(sc);
  const std::vector<Family> families = expand_families(sc);
  const ObservationSet full_grid = generate_grid(sc.grid);
  // removal runs keep the full-grid rectangle so the box layout is unchanged
  const BoundingBox bounds{sc.grid.lon_min, sc.grid.lon_max, sc.grid.lat_min,
                           sc.grid.lat_max};
  const int levels = sc.levels > 0 ? sc.levels : suggest_levels(full_grid.size());

  std::vector<ResultRow> rows;
  rows.reserve(families.size() *
               static_cast<std::size_t>(sc.rank_max - sc.rank_min + 1));

  for (std::size_t fi = 0; fi < families.size(); ++fi) {
    const Family& fam = families[fi];
    const std::uint64_t fseed = family_seed(sc.seed, fi);

    ObservationSet obs = full_grid;
    if (fam.missing_fraction > 0.0)
      obs = remove_observations(full_grid, fam.missing_fraction,
                                split_seed(fseed ^ kRemovalSalt));

    const CovarianceModel original =
        build_covariance(obs, fam.correlation, fam.lengthscale_km);
    CovarianceModel r = original;
    if (fam.method == ReconditionMethod::RidgeRegression)
      r = recondition_rr(original, fam.kappa);
    else if (fam.method == ReconditionMethod::MinimumEigenvalue)
      r = recondition_me(original, fam.kappa);
    const CovarianceModel a = inverse_weighting(r);

    const BoxTree tree = build_tree(obs, levels, bounds);
    const FmmPlan plan_full = plan_build(a.matrix, tree, sc.rank_max);

    // departures always come from the original statistics, reconditioned or
    // not; reconditioning changes the weighting matrix, not the errors
    const std::vector<Vector> departures =
        sample_departures(original, obs, sc.realizations, fseed);
    std::vector<Vector> references;
    references.reserve(departures.size());
    for (const Vector& d : departures)
      references.push_back(apply_dense_oracle(a.matrix, d));

    for (int p = sc.rank_min; p <= sc.rank_max; ++p) {
      const auto t0 = std::chrono::steady_clock::now();
      FmmPlan truncated;
      const FmmPlan* use = &plan_full;
      if (p != plan_full.rank) {
        truncated = plan_truncate(plan_full, p);
        use = &truncated;
      }

      double sum_log = 0.0, sum_sq_log = 0.0, sum_rmse = 0.0;
      int exact = 0;
      for (std::size_t ri = 0; ri < departures.size(); ++ri) {
        const Vector q = apply(*use, departures[ri]);
        const double rmse = rmse_of(q, references[ri]);
        sum_rmse += rmse;
        if (rmse == 0.0) {
          ++exact;
          continue;
        }
        const double lg = std::log10(rmse);
        sum_log += lg;
        sum_sq_log += lg * lg;
      }

      ResultRow row;
      row.scenario = to_string(sc.kind);
      row.family = family_label(fam);
      row.correlation = fam.correlation;
      row.lengthscale_km = fam.lengthscale_km;
      row.method = fam.method;
      row.kappa = fam.kappa;
      row.missing_fraction = fam.missing_fraction;
      row.rank = p;
      row.realizations = sc.realizations;
      row.seed = fseed;
      row.exact_count = exact;
      const int n_eff = sc.realizations - exact;
      row.mean_log_rmse = n_eff > 0 ? sum_log / n_eff : kNan;
      if (n_eff >= 2) {
        const double mean = sum_log / n_eff;
        const double var =
            std::max(0.0, (sum_sq_log - n_eff * mean * mean) / (n_eff - 1));
        row.stderr_log_rmse = std::sqrt(var / n_eff);
      } else {
        row.stderr_log_rmse = kNan;
      }
      row.log_mean_rmse =
          sum_rmse > 0.0 ? std::log10(sum_rmse / sc.realizations) : kNan;
      row.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string results_csv(const std::vector<ResultRow>& rows, bool with_timings) {
  std::ostringstream os;
  os << "scenario,family,correlation,lengthscale_km,recondition,kappa,"
        "missing_fraction,rank,realizations,seed,mean_log10_rmse,"
        "log10_mean_rmse,stderr_log10_rmse,exact_count";
  if (with_timings) os << ",wall_seconds";
  os << '\n';
  for (const ResultRow& row : rows) {
    os << row.scenario << ',' << row.family << ',' << to_string(row.correlation)
       << ',' << format_double(row.lengthscale_km) << ',' << to_string(row.method)
       << ',' << format_double(row.kappa) << ','
       << format_double(row.missing_fraction) << ',' << row.rank << ','
       << row.realizations << ',' << row.seed << ','
       << format_double(row.mean_log_rmse) << ','
       << format_double(row.log_mean_rmse) << ','
       << format_double(row.stderr_log_rmse) << ',' << row.exact_count;
    if (with_timings) os << ',' << format_double(row.wall_seconds);
    os << '\n';
  }
  return os.str();
}

}  // namespace covfmm
