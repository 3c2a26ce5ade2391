#pragma once

#include <string>
#include <vector>

#include "covfmm/box_tree.hpp"
#include "covfmm/errors.hpp"
#include "covfmm/types.hpp"

namespace covfmm {

enum class CorrelationKind { Gaussian, Foar, Soar, Matern52 };

std::string to_string(CorrelationKind kind);
CorrelationKind correlation_kind_from(const std::string& name);

inline constexpr double kEarthRadiusKm = 6371.0;

// Haversine distance in km on a sphere of radius kEarthRadiusKm.
double great_circle_distance(double lat1_deg, double lon1_deg, double lat2_deg,
                             double lon2_deg);

// Correlation at separation r_km:
//   Gaussian   exp(-r^2 / (2 l^2))
//   Foar       exp(-r / l)
//   Soar       (1 + r/l) exp(-r / l)
//   Matern52   (1 + sqrt(5) r/l + 5 r^2 / (3 l^2)) exp(-sqrt(5) r / l)
double correlation_value(CorrelationKind kind, double r_km, double lengthscale_km);

// Packed lower-triangle pairwise distance table; meant for repeated
// correlation builds over one observation set.  Capped at 10^4 points
// (the desk-scale memory budget).
class DistanceTable {
 public:
  explicit DistanceTable(const ObservationSet& obs);
  Index size() const { return n_; }
  double operator()(Index i, Index j) const {
    if (i < j) std::swap(i, j);
    return d_[static_cast<std::size_t>(i) * (i + 1) / 2 + static_cast<std::size_t>(j)];
  }

 private:
  Index n_ = 0;
  std::vector<double> d_;
};

// m x m correlation matrix, unit diagonal, symmetric by construction (the
// lower triangle is computed and mirrored).  Passing a precomputed table
// avoids recomputing distances across kinds/lengthscales.
Matrix build_correlation(const ObservationSet& obs, CorrelationKind kind,
                         double lengthscale_km, const DistanceTable* table = nullptr);

}  // namespace covfmm
