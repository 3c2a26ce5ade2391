#include "covfmm/correlation.hpp"

#include <cmath>
#include <numbers>

namespace covfmm {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kSqrt5 = 2.23606797749978969640;
constexpr Index kDistanceTableCap = 10000;

}  // namespace

std::string to_string(CorrelationKind kind) {
  switch (kind) {
    case CorrelationKind::Gaussian: return "gaussian";
    case CorrelationKind::Foar: return "foar";
    case CorrelationKind::Soar: return "soar";
    case CorrelationKind::Matern52: return "matern52";
  }
  throw ArgumentError("to_string: bad correlation kind");
}

CorrelationKind correlation_kind_from(const std::string& name) {
  if (name == "gaussian") return CorrelationKind::Gaussian;
  if (name == "foar") return CorrelationKind::Foar;
  if (name == "soar") return CorrelationKind::Soar;
  if (name == "matern52") return CorrelationKind::Matern52;
  throw ArgumentError("unknown correlation kind '" + name + "'");
}

double great_circle_distance(double lat1_deg, double lon1_deg, double lat2_deg,
                             double lon2_deg) {
  const double phi1 = lat1_deg * kDegToRad;
  const double phi2 = lat2_deg * kDegToRad;
  const double dphi = (lat2_deg - lat1_deg) * kDegToRad;
  const double dlmb = (lon2_deg - lon1_deg) * kDegToRad;
  const double sp = std::sin(dphi / 2.0);
  const double sl = std::sin(dlmb / 2.0);
  const double a = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

double correlation_value(CorrelationKind kind, double r_km, double lengthscale_km) {
  if (!(lengthscale_km > 0.0))
    throw ArgumentError("correlation_value: lengthscale must be positive");
  if (r_km < 0.0) throw ArgumentError("correlation_value: negative distance");
  const double t = r_km / lengthscale_km;
  switch (kind) {
    case CorrelationKind::Gaussian:
      return std::exp(-0.5 * t * t);
    case CorrelationKind::Foar:
      return std::exp(-t);
    case CorrelationKind::Soar:
      return (1.0 + t) * std::exp(-t);
    case CorrelationKind::Matern52: {
      const double u = kSqrt5 * t;
      return (1.0 + u + 5.0 / 3.0 * t * t) * std::exp(-u);
    }
  }
  throw ArgumentError("correlation_value: bad correlation kind");
}

DistanceTable::DistanceTable(const ObservationSet& obs) {
  n_ = static_cast<Index>(obs.size());
  if (n_ == 0) throw ArgumentError("DistanceTable: empty observation set");
  if (n_ > kDistanceTableCap)
    throw ArgumentError("DistanceTable: capped at 10^4 observations");
  d_.resize(static_cast<std::size_t>(n_) * (n_ + 1) / 2);
  std::size_t at = 0;
  for (Index i = 0; i < n_; ++i)
    for (Index j = 0; j <= i; ++j)
      d_[at++] = great_circle_distance(obs.lat_deg[static_cast<std::size_t>(i)],
                                       obs.lon_deg[static_cast<std::size_t>(i)],
                                       obs.lat_deg[static_cast<std::size_t>(j)],
                                       obs.lon_deg[static_cast<std::size_t>(j)]);
}

Matrix build_correlation(const ObservationSet& obs, CorrelationKind kind,
                         double lengthscale_km, const DistanceTable* table) {
  const auto m = static_cast<Index>(obs.size());
  if (m == 0) throw ArgumentError("build_correlation: empty observation set");
  if (!(lengthscale_km > 0.0))
    throw ArgumentError("build_correlation: lengthscale must be positive");
  if (table && table->size() != m)
    throw ArgumentError("build_correlation: distance table size mismatch");
  Matrix c(m, m);
  for (Index i = 0; i < m; ++i) {
    c(i, i) = 1.0;
    for (Index j = 0; j < i; ++j) {
      const double r =
          table ? (*table)(i, j)
                : great_circle_distance(obs.lat_deg[static_cast<std::size_t>(i)],
                                        obs.lon_deg[static_cast<std::size_t>(i)],
                                        obs.lat_deg[static_cast<std::size_t>(j)],
                                        obs.lon_deg[static_cast<std::size_t>(j)]);
      const double v = correlation_value(kind, r, lengthscale_km);
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

}  // namespace covfmm
