#pragma once

#include <vector>

#include "covfmm/box_tree.hpp"
#include "covfmm/types.hpp"

namespace covfmm {

// Leading singular values of one box's far-field sub-matrix A(I_Fb, I_b).
struct BoxSpectrum {
  BoxId box = 0;
  int level = 0;
  std::vector<double> values;  // descending; up to p+1, fewer when the
                               // sub-matrix has fewer than p+1 of them
  bool truncated = false;      // true when min(m_b, m_Fb) < p+1
};

struct SpectrumFacts {
  std::vector<BoxSpectrum> boxes;      // levels 2..leaf, occupied boxes only
  std::vector<double> mean_by_order;   // [k] = mean of values[k] over the
                                       // boxes where order k+1 is defined
  std::vector<int> count_by_order;     // boxes contributing to each mean
  std::vector<double> matrix_sigma;    // leading p+1 singular values of A
                                       // itself (|eigenvalue|, A symmetric);
                                       // empty when skipped
};

// Per-box leading p+1 singular values plus, optionally, the matrix's own
// leading singular values.  The cross-box mean of the (p+1)-th value
// (mean_by_order[p]) is the spectral predictor of the rank-p truncation
// error.  Boxes with no observations or an empty far field are skipped.
SpectrumFacts singular_value_facts(const Matrix& a, const BoxTree& tree, Index p,
                                   bool with_matrix_sigma = true);

}  // namespace covfmm
