#include "covfmm/covariance.hpp"

#include <cmath>

#include "binary_io.hpp"
#include "covfmm/linalg.hpp"

namespace covfmm {

namespace {

constexpr char kCovMagic[9] = "COVFMMC1";
constexpr std::uint32_t kCovVersion = 1;

void require_model_matrix(const CovarianceModel& model, const char* who) {
  if (model.matrix.rows() == 0 || model.matrix.rows() != model.matrix.cols())
    throw ArgumentError(std::string(who) + ": model has no square matrix");
}

// smallest and largest eigenvalue of a symmetric matrix
std::pair<double, double> eig_extremes(const Matrix& m) {
  if (!is_symmetric(m))
    throw ContractViolation("recondition: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericalError("recondition: eigensolver did not converge");
  return {es.eigenvalues()(0), es.eigenvalues()(m.rows() - 1)};
}

}  // namespace

std::string to_string(ReconditionMethod method) {
  switch (method) {
    case ReconditionMethod::None: return "none";
    case ReconditionMethod::RidgeRegression: return "rr";
    case ReconditionMethod::MinimumEigenvalue: return "me";
  }
  throw ArgumentError("to_string: bad reconditioning method");
}

ReconditionMethod recondition_method_from(const std::string& name) {
  if (name == "none") return ReconditionMethod::None;
  if (name == "rr") return ReconditionMethod::RidgeRegression;
  if (name == "me") return ReconditionMethod::MinimumEigenvalue;
  throw ArgumentError("unknown reconditioning method '" + name + "'");
}

CovarianceModel build_covariance(const ObservationSet& obs, CorrelationKind kind,
                                 double lengthscale_km, const Vector& stddev,
                                 const DistanceTable* table) {
  const auto m = static_cast<Index>(obs.size());
  if (stddev.size() != 1 && stddev.size() != m)
    throw ArgumentError("build_covariance: stddev must have length 1 or m");
  for (Index i = 0; i < stddev.size(); ++i)
    if (!(stddev[i] > 0.0) || !std::isfinite(stddev[i]))
      throw ArgumentError("build_covariance: standard deviations must be positive");

  CovarianceModel model;
  model.kind = kind;
  model.lengthscale_km = lengthscale_km;
  model.stddev = stddev.size() == 1 ? Vector::Constant(m, stddev[0]) : stddev;
  model.matrix = build_correlation(obs, kind, lengthscale_km, table);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < i; ++j) {
      const double v = model.stddev[i] * model.stddev[j] * model.matrix(i, j);
      model.matrix(i, j) = v;
      model.matrix(j, i) = v;
    }
    model.matrix(i, i) = model.stddev[i] * model.stddev[i];
  }
  return model;
}

CovarianceModel build_covariance(const ObservationSet& obs, CorrelationKind kind,
                                 double lengthscale_km, double stddev,
                                 const DistanceTable* table) {
  Vector s(1);
  s[0] = stddev;
  return build_covariance(obs, kind, lengthscale_km, s, table);
}

CovarianceModel recondition_rr(const CovarianceModel& model, double kappa) {
  require_model_matrix(model, "recondition_rr");
  if (!(kappa > 1.0)) throw ArgumentError("recondition_rr: kappa must exceed 1");
  const auto [lo, hi] = eig_extremes(model.matrix);

  CovarianceModel out = model;
  out.recondition.method = ReconditionMethod::RidgeRegression;
  out.recondition.kappa_requested = kappa;
  out.recondition.floor = 0.0;
  const double delta = (hi - lo * kappa) / (kappa - 1.0);
  if (delta <= 0.0) {
    // input already satisfies the request
    out.recondition.delta = 0.0;
    out.recondition.applied = false;
    return out;
  }
  out.recondition.delta = delta;
  out.recondition.applied = true;
  out.matrix.diagonal().array() += delta;
  return out;
}

CovarianceModel recondition_me(const CovarianceModel& model, double kappa) {
  require_model_matrix(model, "recondition_me");
  if (!(kappa >= 1.0)) throw ArgumentError("recondition_me: kappa must be at least 1");
  const EigenDecomposition eig = sym_eig(model.matrix);
  const Index m = model.matrix.rows();
  const double floor = eig.values[0] / kappa;

  CovarianceModel out = model;
  out.recondition.method = ReconditionMethod::MinimumEigenvalue;
  out.recondition.kappa_requested = kappa;
  out.recondition.delta = 0.0;
  out.recondition.floor = floor;
  if (eig.values[m - 1] >= floor) {
    out.recondition.applied = false;  // nothing to clamp
    return out;
  }
  out.recondition.applied = true;
  Vector clamped = eig.values.cwiseMax(floor);
  Matrix w = eig.vectors * clamped.asDiagonal();
  out.matrix.noalias() = w * eig.vectors.transpose();
  for (Index j = 0; j < m; ++j)  // exact symmetry from the lower triangle
    for (Index i = j + 1; i < m; ++i) out.matrix(j, i) = out.matrix(i, j);
  return out;
}

CovarianceModel inverse_weighting(const CovarianceModel& model) {
  require_model_matrix(model, "inverse_weighting");
  if (model.inverse)
    throw ArgumentError("inverse_weighting: model is already an inverse");
  CovarianceModel out = model;
  out.matrix = spd_invert(model.matrix);
  out.inverse = true;
  return out;
}

void save_covariance(const CovarianceModel& model, const std::string& path) {
  require_model_matrix(model, "save_covariance");
  const Index m = model.matrix.rows();
  if (model.stddev.size() != m)
    throw ArgumentError("save_covariance: stddev length mismatch");

  detail::BinaryWriter w(path);
  w.magic(kCovMagic);
  w.u32(kCovVersion);
  w.u8(static_cast<std::uint8_t>(model.kind));
  w.u8(model.inverse ? 1 : 0);
  w.u8(static_cast<std::uint8_t>(model.recondition.method));
  w.u8(model.recondition.applied ? 1 : 0);
  w.f64(model.lengthscale_km);
  w.f64(model.recondition.kappa_requested);
  w.f64(model.recondition.delta);
  w.f64(model.recondition.floor);
  w.u64(static_cast<std::uint64_t>(m));
  for (Index i = 0; i < m; ++i) w.f64(model.stddev[i]);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j <= i; ++j) w.f64(model.matrix(i, j));
  w.finish();
}

CovarianceModel load_covariance(const std::string& path) {
  detail::BinaryReader r(path);
  r.expect_magic(kCovMagic);
  if (r.u32() != kCovVersion)
    throw SerializationError("unsupported covariance container version");

  CovarianceModel model;
  const auto kind = r.u8();
  if (kind > static_cast<std::uint8_t>(CorrelationKind::Matern52))
    throw SerializationError("bad correlation kind in covariance container");
  model.kind = static_cast<CorrelationKind>(kind);
  model.inverse = r.u8() != 0;
  const auto method = r.u8();
  if (method > static_cast<std::uint8_t>(ReconditionMethod::MinimumEigenvalue))
    throw SerializationError("bad reconditioning method in covariance container");
  model.recondition.method = static_cast<ReconditionMethod>(method);
  model.recondition.applied = r.u8() != 0;
  model.lengthscale_km = r.f64();
  model.recondition.kappa_requested = r.f64();
  model.recondition.delta = r.f64();
  model.recondition.floor = r.f64();
  const auto m = static_cast<Index>(r.u64());
  if (m <= 0 || m > 1000000)
    throw SerializationError("implausible size in covariance container");
  model.stddev.resize(m);
  for (Index i = 0; i < m; ++i) model.stddev[i] = r.f64();
  model.matrix.resize(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j <= i; ++j) {
      const double v = r.f64();
      model.matrix(i, j) = v;
      model.matrix(j, i) = v;
    }
  return model;
}

}  // namespace covfmm
