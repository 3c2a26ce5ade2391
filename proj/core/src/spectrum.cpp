#include "covfmm/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "covfmm/errors.hpp"
#include "covfmm/linalg.hpp"

namespace covfmm {

namespace {

// ascending complement of a sorted index list
std::vector<int> complement(const std::vector<int>& sorted_in, Index m) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(m) - sorted_in.size());
  auto it = sorted_in.begin();
  for (int i = 0; i < m; ++i) {
    if (it != sorted_in.end() && *it == i) {
      ++it;
      continue;
    }
    out.push_back(i);
  }
  return out;
}

}  // namespace

SpectrumFacts singular_value_facts(const Matrix& a, const BoxTree& tree, Index p,
                                   bool with_matrix_sigma) {
  const Index m = a.rows();
  if (a.cols() != m) throw ArgumentError("singular_value_facts: matrix not square");
  if (static_cast<std::size_t>(m) != tree.observation_count())
    throw ArgumentError("singular_value_facts: matrix/tree size mismatch");
  if (p < 1) throw ArgumentError("singular_value_facts: p must be positive");

  SpectrumFacts facts;
  facts.mean_by_order.assign(static_cast<std::size_t>(p) + 1, 0.0);
  facts.count_by_order.assign(static_cast<std::size_t>(p) + 1, 0);

  for (int level = 2; level <= tree.levels(); ++level) {
    for (BoxId b = tree.first_box(level); b < tree.end_box(level); ++b) {
      const std::vector<int>& idx = tree.box_indices(b);
      if (idx.empty()) continue;
      std::vector<int> near = tree.indices_of(tree.near_field(b));
      std::sort(near.begin(), near.end());
      const std::vector<int> far = complement(near, m);
      if (far.empty()) continue;

      Matrix sub(static_cast<Index>(far.size()), static_cast<Index>(idx.size()));
      for (Index c = 0; c < sub.cols(); ++c)
        for (Index r = 0; r < sub.rows(); ++r)
          sub(r, c) = a(far[static_cast<std::size_t>(r)],
                        idx[static_cast<std::size_t>(c)]);

      const Index want = std::min<Index>(p + 1, std::min(sub.rows(), sub.cols()));
      const TruncatedSvd svd = truncated_svd(sub, want);

      BoxSpectrum spec;
      spec.box = b;
      spec.level = level;
      spec.truncated = want < p + 1;
      spec.values.assign(svd.singular_values.begin(), svd.singular_values.end());
      for (Index k = 0; k < want; ++k) {
        facts.mean_by_order[static_cast<std::size_t>(k)] += spec.values[static_cast<std::size_t>(k)];
        facts.count_by_order[static_cast<std::size_t>(k)] += 1;
      }
      facts.boxes.push_back(std::move(spec));
    }
  }

  for (std::size_t k = 0; k < facts.mean_by_order.size(); ++k) {
    if (facts.count_by_order[k] > 0)
      facts.mean_by_order[k] /= facts.count_by_order[k];
    else
      facts.mean_by_order[k] = std::numeric_limits<double>::quiet_NaN();
  }

  if (with_matrix_sigma) {
    // A is symmetric, so its singular values are |eigenvalues| sorted down
    const EigenDecomposition eig = sym_eig(a);
    std::vector<double> sigma(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) sigma[static_cast<std::size_t>(i)] = std::abs(eig.values[i]);
    std::sort(sigma.rbegin(), sigma.rend());
    sigma.resize(std::min(sigma.size(), static_cast<std::size_t>(p) + 1));
    facts.matrix_sigma = std::move(sigma);
  }
  return facts;
}

}  // namespace covfmm
