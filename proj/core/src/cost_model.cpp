#include "covfmm/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "covfmm/io.hpp"

namespace covfmm {

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::RowWise: return "row_wise";
    case Scheme::ColumnWise: return "column_wise";
    case Scheme::Block2D: return "block_2d";
    case Scheme::Symmetric: return "symmetric";
    case Scheme::SvdFmm: return "svd_fmm";
  }
  throw ArgumentError("unknown scheme");
}

std::string to_string(CommOp op) {
  switch (op) {
    case CommOp::AllToAllBroadcast: return "all_to_all_broadcast";
    case CommOp::AllToOneReduction: return "all_to_one_reduction";
    case CommOp::Scatter: return "scatter";
    case CommOp::OneToAllBroadcast: return "one_to_all_broadcast";
    case CommOp::AllToAllReduction: return "all_to_all_reduction";
  }
  throw ArgumentError("unknown communication operation");
}

Scheme scheme_from(const std::string& name) {
  for (Scheme s : {Scheme::RowWise, Scheme::ColumnWise, Scheme::Block2D,
                   Scheme::Symmetric, Scheme::SvdFmm})
    if (to_string(s) == name) return s;
  throw ArgumentError("unknown scheme '" + name + "'");
}

double dense_apply_flops(double m) {
  if (!(m >= 1.0)) throw ArgumentError("dense_apply_flops: m must be at least 1");
  return 2.0 * m * m;
}

double fmm_apply_flops(double m, double s, double p) {
  if (!(m > 0.0) || !(s > 0.0))
    throw ArgumentError("fmm_apply_flops: m and s must be positive");
  if (!(p >= 0.0)) throw ArgumentError("fmm_apply_flops: p must be non-negative");
  return 18.0 * m * s + 4.0 * m * p + 64.0 * (m / s) * p * p;
}

SchemeCost comm_cost(Scheme scheme, const MachineParams& params) {
  const double ts = params.startup_time;
  const double tw = params.word_time;
  const double b = params.workers;
  const double p = params.rank;
  const double m = params.observations;
  const double s = params.leaf_occupancy;
  if (!(ts >= 0.0) || !(tw >= 0.0))
    throw ArgumentError("comm_cost: negative time parameter");
  if (!(b > 0.0) || !(p > 0.0) || !(m > 0.0) || !(s > 0.0))
    throw ArgumentError("comm_cost: workers, rank, observations and occupancy must be positive");
  if (std::abs(s * b - m) > 1e-9 * m)
    throw ArgumentError("comm_cost: occupancy times workers must equal observations");

  const double lg_b = std::log2(b);
  SchemeCost out;
  out.scheme = scheme;
  switch (scheme) {
    case Scheme::RowWise:
      // everyone needs the whole vector before multiplying its rows
      out.rows = {{CommOp::AllToAllBroadcast, b, m / b, false,
                   ts * lg_b + tw * m, false}};
      break;
    case Scheme::ColumnWise:
      // partial products are summed on one worker, then dealt back out
      out.rows = {{CommOp::AllToOneReduction, b, m, false,
                   (ts + tw * m) * lg_b, false},
                  {CommOp::Scatter, b, m / b, false, ts * lg_b + tw * m, false}};
      break;
    case Scheme::Block2D: {
      const double sq = std::sqrt(b);
      const double lg_sq = std::log2(sq);
      const double t = (ts + tw * m / sq) * lg_sq;
      out.rows = {{CommOp::OneToAllBroadcast, sq - 1.0, m / sq, false, t, false},
                  {CommOp::AllToOneReduction, sq - 1.0, m / sq, false, t, false}};
      break;
    }
    case Scheme::Symmetric:
      // each worker holds half a block row; message sizes average m/B and
      // the dense-case formulas bound the exchange from above
      out.rows = {{CommOp::AllToAllBroadcast, b, m / b, true,
                   ts * lg_b + tw * m, true},
                  {CommOp::AllToAllReduction, b, m / b, true,
                   ts * lg_b + tw * m, true}};
      break;
    case Scheme::SvdFmm:
      // four siblings reduce multipoles to their parent, expansions and
      // near-field pieces travel in one bounded all-to-all, parents push
      // locals back down; only the middle row depends on m at all
      out.rows = {{CommOp::AllToOneReduction, 4.0, p, false,
                   (ts + tw * p) * std::log2(4.0), false},
                  {CommOp::AllToAllBroadcast, b, std::max(2.0 * p, m / b), true,
                   ts * lg_b + tw * m, true},
                  {CommOp::OneToAllBroadcast, 4.0, p, false,
                   (ts + tw * p) * std::log2(4.0), false}};
      break;
  }
  if (out.rows.empty()) throw ArgumentError("unknown scheme");
  return out;
}

std::size_t fmm_crossover(double p,
                          const std::function<double(std::size_t)>& s_rule) {
  if (!s_rule) throw ArgumentError("fmm_crossover: missing occupancy rule");
  constexpr std::size_t kScanCap = 10000000;
  for (std::size_t m = 1; m <= kScanCap; ++m) {
    const double s = s_rule(m);
    if (!(s > 0.0)) continue;  // rule not meaningful yet at this size
    if (fmm_apply_flops(static_cast<double>(m), s, p) <
        dense_apply_flops(static_cast<double>(m)))
      return m;
  }
  throw DomainError("fmm_crossover: no crossover below the scan cap");
}

std::size_t fmm_crossover(double p) {
  return fmm_crossover(p, [](std::size_t m) { return static_cast<double>(m) / 64.0; });
}

std::string cost_csv(const MachineParams& params) {
  std::ostringstream os;
  os << "scheme,operation,participants,message_size,time_seconds,"
        "size_is_estimate,time_is_upper_bound\n";
  for (Scheme s : {Scheme::RowWise, Scheme::ColumnWise, Scheme::Block2D,
                   Scheme::Symmetric, Scheme::SvdFmm}) {
    const SchemeCost cost = comm_cost(s, params);
    for (const CostRow& row : cost.rows)
      os << to_string(s) << ',' << to_string(row.op) << ','
         << format_double(row.participants) << ','
         << format_double(row.message_size) << ','
         << format_double(row.time_seconds) << ','
         << (row.size_is_estimate ? 1 : 0) << ','
         << (row.time_is_upper_bound ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace covfmm
