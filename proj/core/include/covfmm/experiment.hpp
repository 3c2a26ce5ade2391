#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "covfmm/box_tree.hpp"
#include "covfmm/covariance.hpp"
#include "covfmm/fmm_plan.hpp"
#include "covfmm/types.hpp"

namespace covfmm {

//
// Experiment engine: regular observation grids, synthetic departures, and
// sweeps that compare the tree-accelerated product against the dense one.
// Everything is deterministic for a fixed scenario and seed: realization
// loops run in index order and results are formatted with round-trip float
// printing, so a rerun reproduces the CSV byte for byte.
//

struct GridSpec {
  double lat_min = 54.0, lat_max = 60.0;
  double lon_min = -6.0, lon_max = 6.0;
  int lat_count = 48, lon_count = 72;
};

// lat_count x lon_count points, endpoints included, row major with latitude
// as the outer loop
ObservationSet generate_grid(const GridSpec& spec);

enum class ScenarioKind {
  RankSweep,
  LengthscaleSweep,
  ReconditionCompare,
  CorrelationCompare,
  MissingObs,
};

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from(const std::string& name);

struct ExperimentScenario {
  ScenarioKind kind = ScenarioKind::RankSweep;
  GridSpec grid;
  std::vector<CorrelationKind> correlations;
  std::vector<double> lengthscales_km;
  std::vector<ReconditionMethod> methods;  // empty: run unreconditioned
  std::vector<double> kappas;              // crossed with methods when present
  std::vector<double> missing_fractions;   // empty: keep every observation
  int rank_min = 1;
  int rank_max = 10;
  int realizations = 100;
  int levels = 0;  // 0: pick from the observation count
  std::uint64_t seed = 0;
};

// the roster defaults for each scenario kind (grids, sweeps, realizations)
ExperimentScenario default_scenario(ScenarioKind kind);

// Flat key = value text, # comments.  Unknown keys are errors; `scenario`
// selects the kind and the remaining keys override its defaults.
ExperimentScenario parse_scenario_text(const std::string& text);
ExperimentScenario parse_scenario_file(const std::string& path);

// log10 of sqrt(mean squared difference); identical vectors set `exact`
// instead of producing -inf
struct LogRmse {
  double value = 0.0;
  bool exact = false;
};
LogRmse log_rmse(const Vector& q, const Vector& q_ref);

// departures are drawn from N(0, R + B) where B is the 20 km SOAR
// background term with variance 0.36
Matrix innovation_covariance(const CovarianceModel& r, const ObservationSet& obs);

// n departure vectors; column r of the underlying draw is realization r.
// r must be the original (unreconditioned, uninverted) covariance.
std::vector<Vector> sample_departures(const CovarianceModel& r,
                                      const ObservationSet& obs, int n,
                                      std::uint64_t seed);

// keep a uniformly random (1 - fraction) subset; survivors stay in their
// original relative order and are re-indexed densely
ObservationSet remove_observations(const ObservationSet& obs, double fraction,
                                   std::uint64_t seed);

// one half of d . (A d), the quadratic observation penalty
double observation_cost(const FmmPlan& plan, const Vector& d);

struct ResultRow {
  std::string scenario;
  std::string family;  // e.g. soar_l80_rr1000_miss10
  CorrelationKind correlation = CorrelationKind::Soar;
  double lengthscale_km = 0.0;
  ReconditionMethod method = ReconditionMethod::None;
  double kappa = 0.0;
  double missing_fraction = 0.0;
  int rank = 0;
  int realizations = 0;
  std::uint64_t seed = 0;  // the family seed actually used
  double mean_log_rmse = 0.0;   // mean over realizations of log10(rmse)
  double log_mean_rmse = 0.0;   // log10 of the mean rmse, for reference
  double stderr_log_rmse = 0.0; // standard error of the per-realization logs
  int exact_count = 0;          // realizations whose product was exact
  double wall_seconds = 0.0;
};

// deterministic seed ladder: one sub-seed per family, derived from the
// scenario seed and the family's position in the sweep
std::uint64_t family_seed(std::uint64_t scenario_seed, std::size_t family_index);

std::vector<ResultRow> run_scenario(const ExperimentScenario& sc);

// fixed schema, one row per (family, rank).  Wall time is a measurement, so
// the column is off by default to keep output reproducible.
std::string results_csv(const std::vector<ResultRow>& rows,
                        bool with_timings = false);

}  // namespace covfmm
