#pragma once

#include <functional>
#include <string>
#include <vector>

#include "covfmm/errors.hpp"

namespace covfmm {

//
// Analytic flop and communication-cost formulas for one matrix-vector
// product q = A d distributed over B workers.  Nothing here measures
// anything; the numbers describe the algorithms, not a machine.
//

enum class Scheme { RowWise, ColumnWise, Block2D, Symmetric, SvdFmm };

enum class CommOp {
  AllToAllBroadcast,
  AllToOneReduction,
  Scatter,
  OneToAllBroadcast,
  AllToAllReduction,
};

std::string to_string(Scheme scheme);
std::string to_string(CommOp op);
Scheme scheme_from(const std::string& name);

struct MachineParams {
  double startup_time = 0.0;    // seconds per message, >= 0
  double word_time = 0.0;       // seconds per transferred word, >= 0
  double workers = 0.0;         // B, equals the leaf box count
  double rank = 0.0;            // p, singular vectors kept per box
  double observations = 0.0;    // m
  double leaf_occupancy = 0.0;  // s, mean observations per leaf; s * B = m
};

struct CostRow {
  CommOp op;
  double participants;
  double message_size;       // words
  bool size_is_estimate;     // size is an average or a range bound, not exact
  double time_seconds;
  bool time_is_upper_bound;  // the formula bounds the time from above
};

struct SchemeCost {
  Scheme scheme;
  std::vector<CostRow> rows;
};

// 2 m^2 flops for the dense product; exact for integer m below 2^26
double dense_apply_flops(double m);

// 18 m s + 4 m p + 64 (m/s) p^2 flops for the tree-accelerated product:
// near-field blocks, leaf expansion plus final evaluation, and the
// translation sweeps.  Setup (the per-box SVDs) is excluded; it amortizes
// over repeated products and is not modelled here.  m and s must be
// positive, p may be zero (near field only).
double fmm_apply_flops(double m, double s, double p);

// Communication rounds of one product under the given scheme.  Logs are
// base 2.  Rows carry flags where the formula is an estimate or an upper
// bound rather than an exact cost.
SchemeCost comm_cost(Scheme scheme, const MachineParams& params);

// Smallest m with fmm_apply_flops(m, s_rule(m), p) < dense_apply_flops(m),
// scanning m upward.  The default rule grows leaves with the problem,
// s = m / 64.  Throws DomainError if there is no crossover below 10^7.
std::size_t fmm_crossover(double p, const std::function<double(std::size_t)>& s_rule);
std::size_t fmm_crossover(double p);

// All five schemes as CSV with header
// scheme,operation,participants,message_size,time_seconds,size_is_estimate,time_is_upper_bound
std::string cost_csv(const MachineParams& params);

}  // namespace covfmm
