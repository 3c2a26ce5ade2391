#pragma once

#include <string>
#include <vector>

#include "covfmm/correlation.hpp"
#include "covfmm/types.hpp"

namespace covfmm {

enum class ReconditionMethod { None, RidgeRegression, MinimumEigenvalue };

std::string to_string(ReconditionMethod method);
ReconditionMethod recondition_method_from(const std::string& name);

// What was done to tame the condition number, if anything.  `applied` stays
// false when the input already satisfied the request (no-op with delta = 0).
struct ReconditionRecord {
  ReconditionMethod method = ReconditionMethod::None;
  double kappa_requested = 0.0;
  double delta = 0.0;  // ridge shift actually added
  double floor = 0.0;  // eigenvalue threshold T = lambda_max / kappa
  bool applied = false;
};

// An observation-error covariance R = D C D (or its inverse weighting
// matrix), together with how it was built.  `matrix` is symmetric by
// construction: builders fill one triangle and mirror it.
struct CovarianceModel {
  Matrix matrix;
  CorrelationKind kind = CorrelationKind::Soar;
  double lengthscale_km = 0.0;
  Vector stddev;  // per-observation sigma
  ReconditionRecord recondition;
  bool inverse = false;  // true once inverse_weighting has been applied
};

// R(i,j) = sigma_i sigma_j C(i,j).  stddev must be length 1 (uniform) or m.
CovarianceModel build_covariance(const ObservationSet& obs, CorrelationKind kind,
                                 double lengthscale_km, const Vector& stddev,
                                 const DistanceTable* table = nullptr);
CovarianceModel build_covariance(const ObservationSet& obs, CorrelationKind kind,
                                 double lengthscale_km, double stddev = 1.0,
                                 const DistanceTable* table = nullptr);

// Ridge regression reconditioning: R + delta I with
// delta = (lambda_max - lambda_min kappa) / (kappa - 1), which lands the
// condition number exactly on kappa.  kappa must exceed 1.  When the input
// already satisfies kappa the model is returned unchanged, applied = false.
CovarianceModel recondition_rr(const CovarianceModel& model, double kappa);

// Minimum eigenvalue reconditioning: eigenvalues below T = lambda_max / kappa
// are raised to T and the matrix is rebuilt from the (unchanged) eigenvectors.
CovarianceModel recondition_me(const CovarianceModel& model, double kappa);

// A = R^{-1} via Cholesky; propagates DefinitenessError when R is not
// numerically positive definite (the cue to recondition first).
CovarianceModel inverse_weighting(const CovarianceModel& model);

// Binary container: magic, version, kind, lengthscale, reconditioning record,
// per-observation sigmas and the row-major lower triangle as 8-byte
// little-endian floats.  Round-trips bit exactly.
void save_covariance(const CovarianceModel& model, const std::string& path);
CovarianceModel load_covariance(const std::string& path);

}  // namespace covfmm
