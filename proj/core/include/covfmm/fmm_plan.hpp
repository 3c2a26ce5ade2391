#pragma once

#include <string>
#include <utility>
#include <vector>

#include "covfmm/box_tree.hpp"
#include "covfmm/types.hpp"

namespace covfmm {

//
// Fast application of a symmetric weighting matrix A to departure vectors d.
// The near field (a box and its touching neighbours) is applied densely; the
// far field goes through per-box truncated SVDs of the far-field sub-matrices
// A(I_Fb, I_b) plus small rank x rank translation operators between boxes.
//
// Per box b the source expansion basis is the right singular vectors of
// A(I_Fb, I_b); because A is symmetric, the target factors of A(I_b, I_Fb)
// are the same factors with the roles of the left/right vectors swapped, so
// one SVD per box serves both directions (the "symmetric shortcut").  Both
// the one-SVD and the two-SVD construction are available; they agree in the
// applied product up to roundoff since singular-vector sign flips cancel
// between the operators and the final evaluation.
//
// A plan is self contained: after plan_build returns, A can be discarded.
//

struct BoxFactors {
  Index rank = 0;  // clipped: min(p, m_b, m_Fb); 0 for empty/degenerate boxes
  Matrix v_src;    // m_b x rank, right singular vectors of A(I_Fb, I_b)
  Vector s_src;    // rank
  Matrix u_tgt;    // m_b x rank, left singular vectors of A(I_b, I_Fb);
                   // equal to v_src under the symmetric shortcut
  Vector s_tgt;    // equal to s_src under the shortcut
};

struct FmmPlan {
  BoxTree tree;
  Index rank = 0;  // requested p
  bool symmetric_shortcut = true;
  std::size_t m = 0;

  // indexed by BoxId (slots below level 2 unused)
  std::vector<BoxFactors> factors;
  // child multipole -> parent multipole, indexed by child id (levels 3..leaf)
  std::vector<Matrix> m2m;
  // parent local -> child local, indexed by child id (levels 3..leaf)
  std::vector<Matrix> l2l;
  // per target box: (source box, operator), source ids ascending
  std::vector<std::vector<std::pair<BoxId, Matrix>>> m2l;
  // per leaf box: A(I_b, near columns), columns in ascending observation order
  std::vector<Matrix> near_block;
  std::vector<std::vector<int>> near_cols;
};

// Multipole and local expansion coefficients per box, for inspection.
struct ExpansionState {
  std::vector<Vector> multipole;  // indexed by BoxId, levels 2..leaf
  std::vector<Vector> local;      // fully accumulated local expansions
};

// Builds every factor, operator and near-field block.  A must be symmetric
// with one row per tree observation; p >= 1.  Ranks are clipped per box, so
// p larger than a box's sub-matrix rank is legal (and exact for that box).
FmmPlan plan_build(const Matrix& a, const BoxTree& tree, Index p,
                   bool symmetric_shortcut = true);

// Leading-rank restriction of an existing plan to p <= plan.rank.  Equivalent
// to plan_build at rank p (truncated SVD triplets and the operator sums nest),
// but without redoing the SVDs.
FmmPlan plan_truncate(const FmmPlan& plan, Index p);

// q = A d through the plan; equals near_field_apply + far_field_apply
// entry for entry.  All accumulations run in a fixed ascending order, so
// results are bit-reproducible for a fixed plan.
Vector apply(const FmmPlan& plan, const Vector& d);
Vector near_field_apply(const FmmPlan& plan, const Vector& d);
Vector far_field_apply(const FmmPlan& plan, const Vector& d);

ExpansionState expansions(const FmmPlan& plan, const Vector& d);

// Reference dense product (2 m^2 flops), ascending-index accumulation.
Vector apply_dense_oracle(const Matrix& a, const Vector& d);

// Versioned binary container (header, tree index lists, per-box factor
// records, operators, near blocks; 8-byte little-endian floats).  Loads
// round-trip bit exactly.
void save_plan(const FmmPlan& plan, const std::string& path);
FmmPlan load_plan(const std::string& path);

}  // namespace covfmm
