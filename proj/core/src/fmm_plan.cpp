#include "covfmm/fmm_plan.hpp"

#include <algorithm>

#include "binary_io.hpp"
#include "covfmm/linalg.hpp"

namespace covfmm {

namespace {

constexpr char kPlanMagic[9] = "COVFMMP1";
constexpr std::uint32_t kPlanVersion = 1;

// ascending complement of a sorted index list in [0, m)
std::vector<int> complement(const std::vector<int>& sorted_in, Index m) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(m) - sorted_in.size());
  auto it = sorted_in.begin();
  for (int i = 0; i < static_cast<int>(m); ++i) {
    if (it != sorted_in.end() && *it == i) {
      ++it;
      continue;
    }
    out.push_back(i);
  }
  return out;
}

// positions of `subset` inside `super`; both ascending, subset contained
std::vector<Index> positions_in(const std::vector<int>& subset,
                                const std::vector<int>& super) {
  std::vector<Index> pos(subset.size());
  std::size_t at = 0;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    while (at < super.size() && super[at] < subset[i]) ++at;
    if (at == super.size() || super[at] != subset[i])
      throw ContractViolation("plan_build: index set is not nested as expected");
    pos[i] = static_cast<Index>(at);
  }
  return pos;
}

std::vector<int> sorted_near_indices(const BoxTree& tree, BoxId b) {
  std::vector<int> near = tree.indices_of(tree.near_field(b));
  std::sort(near.begin(), near.end());
  return near;
}

void write_matrix(detail::BinaryWriter& w, const Matrix& m) {
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r) w.f64(m(r, c));
}

Matrix read_matrix(detail::BinaryReader& r) {
  const auto rows = static_cast<Index>(r.u32());
  const auto cols = static_cast<Index>(r.u32());
  if (rows < 0 || cols < 0 || rows * cols > 100000000)
    throw SerializationError("implausible matrix dimensions in plan container");
  Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index i = 0; i < rows; ++i) m(i, c) = r.f64();
  return m;
}

}  // namespace

FmmPlan plan_build(const Matrix& a, const BoxTree& tree, Index p,
                   bool symmetric_shortcut) {
  const Index m = a.rows();
  if (a.cols() != m) throw ArgumentError("plan_build: matrix not square");
  if (static_cast<std::size_t>(m) != tree.observation_count())
    throw ArgumentError("plan_build: matrix/tree size mismatch");
  if (p < 1) throw ArgumentError("plan_build: rank must be positive");
  if (!is_symmetric(a)) throw ContractViolation("plan_build: matrix is not symmetric");

  const int leaf = tree.levels();
  const BoxId n_ids = level_offset(leaf + 1);

  FmmPlan plan;
  plan.tree = tree;
  plan.rank = p;
  plan.symmetric_shortcut = symmetric_shortcut;
  plan.m = static_cast<std::size_t>(m);
  plan.factors.resize(static_cast<std::size_t>(n_ids));
  plan.m2m.resize(static_cast<std::size_t>(n_ids));
  plan.l2l.resize(static_cast<std::size_t>(n_ids));
  plan.m2l.resize(static_cast<std::size_t>(n_ids));
  plan.near_block.resize(static_cast<std::size_t>(n_ids));
  plan.near_cols.resize(static_cast<std::size_t>(n_ids));

  // far-field index lists and the long right/left factors, kept only until
  // the translation operators are assembled
  std::vector<std::vector<int>> far(static_cast<std::size_t>(n_ids));
  std::vector<Matrix> v_tgt_long(static_cast<std::size_t>(n_ids));  // m_Fb x rank

  for (int level = 2; level <= leaf; ++level) {
    for (BoxId b = tree.first_box(level); b < tree.end_box(level); ++b) {
      const std::vector<int>& idx = tree.box_indices(b);
      if (idx.empty()) continue;
      far[static_cast<std::size_t>(b)] = complement(sorted_near_indices(tree, b), m);
      const std::vector<int>& fb = far[static_cast<std::size_t>(b)];
      const auto mb = static_cast<Index>(idx.size());
      const auto mf = static_cast<Index>(fb.size());
      const Index r = std::min(p, std::min(mb, mf));
      if (r == 0) continue;

      Matrix sub(mf, mb);
      for (Index c = 0; c < mb; ++c)
        for (Index t = 0; t < mf; ++t)
          sub(t, c) = a(fb[static_cast<std::size_t>(t)], idx[static_cast<std::size_t>(c)]);

      BoxFactors& f = plan.factors[static_cast<std::size_t>(b)];
      const TruncatedSvd src = truncated_svd(sub, r);
      f.rank = r;
      f.v_src = src.right;
      f.s_src = src.singular_values;
      if (symmetric_shortcut) {
        // A(I_b, I_Fb) = A(I_Fb, I_b)^T, so the target factors are the source
        // factors with left and right swapped
        f.u_tgt = src.right;
        f.s_tgt = src.singular_values;
        v_tgt_long[static_cast<std::size_t>(b)] = src.left;
      } else {
        Matrix sub_t(mb, mf);
        for (Index c = 0; c < mf; ++c)
          for (Index t = 0; t < mb; ++t)
            sub_t(t, c) = a(idx[static_cast<std::size_t>(t)], fb[static_cast<std::size_t>(c)]);
        const TruncatedSvd tgt = truncated_svd(sub_t, r);
        f.u_tgt = tgt.left;
        f.s_tgt = tgt.singular_values;
        v_tgt_long[static_cast<std::size_t>(b)] = tgt.right;
      }
    }
  }

  // multipole-to-multipole: child source basis into parent source basis
  for (int level = 2; level < leaf; ++level) {
    for (BoxId b = tree.first_box(level); b < tree.end_box(level); ++b) {
      const BoxFactors& fp = plan.factors[static_cast<std::size_t>(b)];
      if (fp.rank == 0) continue;
      for (BoxId c = 4 * b + 4; c <= 4 * b + 7; ++c) {
        const BoxFactors& fc = plan.factors[static_cast<std::size_t>(c)];
        if (fc.rank == 0) continue;
        const std::vector<Index> pos =
            positions_in(tree.box_indices(c), tree.box_indices(b));
        Matrix t(fp.rank, fc.rank);
        for (Index k = 0; k < fp.rank; ++k)
          for (Index k2 = 0; k2 < fc.rank; ++k2) {
            double acc = 0.0;
            for (std::size_t i = 0; i < pos.size(); ++i)
              acc += fp.v_src(pos[i], k) * fc.v_src(static_cast<Index>(i), k2);
            t(k, k2) = acc;
          }
        plan.m2m[static_cast<std::size_t>(c)] = std::move(t);
      }
    }
  }

  // multipole-to-local across each interaction list
  for (int level = 2; level <= leaf; ++level) {
    for (BoxId b = tree.first_box(level); b < tree.end_box(level); ++b) {
      const BoxFactors& ft = plan.factors[static_cast<std::size_t>(b)];
      if (ft.rank == 0) continue;
      const Matrix& vt = v_tgt_long[static_cast<std::size_t>(b)];
      for (BoxId s : tree.interaction_list(b)) {
        const BoxFactors& fs = plan.factors[static_cast<std::size_t>(s)];
        if (fs.rank == 0) continue;
        const std::vector<Index> pos =
            positions_in(tree.box_indices(s), far[static_cast<std::size_t>(b)]);
        Matrix t(ft.rank, fs.rank);
        for (Index k = 0; k < ft.rank; ++k)
          for (Index k2 = 0; k2 < fs.rank; ++k2) {
            double acc = 0.0;
            for (std::size_t i = 0; i < pos.size(); ++i)
              acc += vt(pos[i], k) * fs.v_src(static_cast<Index>(i), k2);
            t(k, k2) = acc;
          }
        plan.m2l[static_cast<std::size_t>(b)].emplace_back(s, std::move(t));
      }
    }
  }

  // local-to-local: parent target basis into child target basis
  for (int level = 3; level <= leaf; ++level) {
    for (BoxId b = tree.first_box(level); b < tree.end_box(level); ++b) {
      const BoxFactors& fc = plan.factors[static_cast<std::size_t>(b)];
      if (fc.rank == 0) continue;
      const BoxId parent = tree.parent(b);
      const BoxFactors& fp = plan.factors[static_cast<std::size_t>(parent)];
      if (fp.rank == 0) continue;
      const std::vector<Index> pos = positions_in(far[static_cast<std::size_t>(parent)],
                                                  far[static_cast<std::size_t>(b)]);
      const Matrix& vc = v_tgt_long[static_cast<std::size_t>(b)];
      const Matrix& vp = v_tgt_long[static_cast<std::size_t>(parent)];
      Matrix t(fc.rank, fp.rank);
      for (Index k = 0; k < fc.rank; ++k)
        for (Index k2 = 0; k2 < fp.rank; ++k2) {
          double acc = 0.0;
          for (std::size_t i = 0; i < pos.size(); ++i)
            acc += vc(pos[i], k) * vp(static_cast<Index>(i), k2);
          t(k, k2) = acc;
        }
      plan.l2l[static_cast<std::size_t>(b)] = std::move(t);
    }
  }

  // dense near-field blocks, one per occupied leaf
  for (BoxId b = tree.first_box(leaf); b < tree.end_box(leaf); ++b) {
    const std::vector<int>& idx = tree.box_indices(b);
    if (idx.empty()) continue;
    std::vector<int> cols = sorted_near_indices(tree, b);
    Matrix blk(static_cast<Index>(idx.size()), static_cast<Index>(cols.size()));
    for (Index c = 0; c < blk.cols(); ++c)
      for (Index t = 0; t < blk.rows(); ++t)
        blk(t, c) = a(idx[static_cast<std::size_t>(t)], cols[static_cast<std::size_t>(c)]);
    plan.near_block[static_cast<std::size_t>(b)] = std::move(blk);
    plan.near_cols[static_cast<std::size_t>(b)] = std::move(cols);
  }

  return plan;
}

FmmPlan plan_truncate(const FmmPlan& plan, Index p) {
  if (p < 1 || p > plan.rank)
    throw ArgumentError("plan_truncate: p must be in [1, plan rank]");
  const int leaf = plan.tree.levels();
  const BoxId n_ids = level_offset(leaf + 1);

  FmmPlan out;
  out.tree = plan.tree;
  out.rank = p;
  out.symmetric_shortcut = plan.symmetric_shortcut;
  out.m = plan.m;
  out.factors.resize(static_cast<std::size_t>(n_ids));
  out.m2m.resize(static_cast<std::size_t>(n_ids));
  out.l2l.resize(static_cast<std::size_t>(n_ids));
  out.m2l.resize(static_cast<std::size_t>(n_ids));
  out.near_block = plan.near_block;
  out.near_cols = plan.near_cols;

  auto new_rank = [&](BoxId b) {
    return std::min(p, plan.factors[static_cast<std::size_t>(b)].rank);
  };

  for (BoxId b = level_offset(2); b < n_ids; ++b) {
    const BoxFactors& f = plan.factors[static_cast<std::size_t>(b)];
    if (f.rank == 0) continue;
    const Index r = new_rank(b);
    BoxFactors& g = out.factors[static_cast<std::size_t>(b)];
    g.rank = r;
    g.v_src = f.v_src.leftCols(r);
    g.s_src = f.s_src.head(r);
    g.u_tgt = f.u_tgt.leftCols(r);
    g.s_tgt = f.s_tgt.head(r);
  }
  for (BoxId b = level_offset(3); b < n_ids; ++b) {
    if (plan.m2m[static_cast<std::size_t>(b)].size() != 0) {
      const BoxId parent = (b - 4) / 4;
      out.m2m[static_cast<std::size_t>(b)] =
          plan.m2m[static_cast<std::size_t>(b)].topLeftCorner(new_rank(parent), new_rank(b));
    }
    if (plan.l2l[static_cast<std::size_t>(b)].size() != 0) {
      const BoxId parent = (b - 4) / 4;
      out.l2l[static_cast<std::size_t>(b)] =
          plan.l2l[static_cast<std::size_t>(b)].topLeftCorner(new_rank(b), new_rank(parent));
    }
  }
  for (BoxId b = level_offset(2); b < n_ids; ++b)
    for (const auto& [src, t] : plan.m2l[static_cast<std::size_t>(b)])
      out.m2l[static_cast<std::size_t>(b)].emplace_back(
          src, Matrix(t.topLeftCorner(new_rank(b), new_rank(src))));

  return out;
}

ExpansionState expansions(const FmmPlan& plan, const Vector& d) {
  if (static_cast<std::size_t>(d.size()) != plan.m)
    throw ArgumentError("expansions: vector length mismatch");
  const BoxTree& tree = plan.tree;
  const int leaf = tree.levels();
  const BoxId n_ids = level_offset(leaf + 1);

  ExpansionState st;
  st.multipole.assign(static_cast<std::size_t>(n_ids), Vector());
  st.local.assign(static_cast<std::size_t>(n_ids), Vector());

  // leaf multipoles straight from the departures
  for (BoxId b = tree.first_box(leaf); b < tree.end_box(leaf); ++b) {
    const BoxFactors& f = plan.factors[static_cast<std::size_t>(b)];
    if (f.rank == 0) continue;
    const std::vector<int>& idx = tree.box_indices(b);
    Vector phi(f.rank);
    for (Index k = 0; k < f.rank; ++k) {
      double acc = 0.0;
      for (std::size_t t = 0; t < idx.size(); ++t)
        acc += f.v_src(static_cast<Index>(t), k) * d[idx[t]];
      phi[k] = acc;
    }
    st.multipole[static_cast<std::size_t>(b)] = std::move(phi);
  }

  // aggregate multipoles towards level 2
  for (int level = leaf - 1; level >= 2; --level) {
    for (BoxId b = tree.first_box(level); b < tree.end_box(level); ++b) {
      const BoxFactors& f = plan.factors[static_cast<std::size_t>(b)];
      if (f.rank == 0) continue;
      Vector phi = Vector::Zero(f.rank);
      for (BoxId c = 4 * b + 4; c <= 4 * b + 7; ++c) {
        const Vector& pc = st.multipole[static_cast<std::size_t>(c)];
        if (pc.size() == 0) continue;
        const Matrix& t = plan.m2m[static_cast<std::size_t>(c)];
        for (Index k = 0; k < t.rows(); ++k) {
          double acc = 0.0;
          for (Index k2 = 0; k2 < t.cols(); ++k2) acc += t(k, k2) * pc[k2];
          phi[k] += acc;
        }
      }
      st.multipole[static_cast<std::size_t>(b)] = std::move(phi);
    }
  }

  // interaction-list translations, then push parent locals down; processing
  // levels top-down means a parent's local expansion is complete before its
  // children read it
  for (int level = 2; level <= leaf; ++level) {
    for (BoxId b = tree.first_box(level); b < tree.end_box(level); ++b) {
      const BoxFactors& f = plan.factors[static_cast<std::size_t>(b)];
      if (f.rank == 0) continue;
      Vector psi = Vector::Zero(f.rank);
      for (const auto& [src, t] : plan.m2l[static_cast<std::size_t>(b)]) {
        const Vector& ps = st.multipole[static_cast<std::size_t>(src)];
        for (Index k = 0; k < t.rows(); ++k) {
          double acc = 0.0;
          for (Index k2 = 0; k2 < t.cols(); ++k2) acc += t(k, k2) * ps[k2];
          psi[k] += acc;
        }
      }
      if (level > 2) {
        const Matrix& t = plan.l2l[static_cast<std::size_t>(b)];
        if (t.size() != 0) {
          const Vector& pp = st.local[static_cast<std::size_t>(tree.parent(b))];
          for (Index k = 0; k < t.rows(); ++k) {
            double acc = 0.0;
            for (Index k2 = 0; k2 < t.cols(); ++k2) acc += t(k, k2) * pp[k2];
            psi[k] += acc;
          }
        }
      }
      st.local[static_cast<std::size_t>(b)] = std::move(psi);
    }
  }
  return st;
}

Vector near_field_apply(const FmmPlan& plan, const Vector& d) {
  if (static_cast<std::size_t>(d.size()) != plan.m)
    throw ArgumentError("near_field_apply: vector length mismatch");
  const BoxTree& tree = plan.tree;
  Vector q = Vector::Zero(d.size());
  const int leaf = tree.levels();
  for (BoxId b = tree.first_box(leaf); b < tree.end_box(leaf); ++b) {
    const std::vector<int>& idx = tree.box_indices(b);
    if (idx.empty()) continue;
    const Matrix& blk = plan.near_block[static_cast<std::size_t>(b)];
    const std::vector<int>& cols = plan.near_cols[static_cast<std::size_t>(b)];
    for (std::size_t t = 0; t < idx.size(); ++t) {
      double acc = 0.0;
      for (std::size_t c = 0; c < cols.size(); ++c)
        acc += blk(static_cast<Index>(t), static_cast<Index>(c)) * d[cols[c]];
      q[idx[t]] = acc;
    }
  }
  return q;
}

Vector far_field_apply(const FmmPlan& plan, const Vector& d) {
  const ExpansionState st = expansions(plan, d);
  const BoxTree& tree = plan.tree;
  Vector q = Vector::Zero(d.size());
  const int leaf = tree.levels();
  for (BoxId b = tree.first_box(leaf); b < tree.end_box(leaf); ++b) {
    const BoxFactors& f = plan.factors[static_cast<std::size_t>(b)];
    if (f.rank == 0) continue;
    const std::vector<int>& idx = tree.box_indices(b);
    const Vector& psi = st.local[static_cast<std::size_t>(b)];
    for (std::size_t t = 0; t < idx.size(); ++t) {
      double acc = 0.0;
      for (Index k = 0; k < f.rank; ++k)
        acc += f.u_tgt(static_cast<Index>(t), k) * f.s_tgt[k] * psi[k];
      q[idx[t]] = acc;
    }
  }
  return q;
}

Vector apply(const FmmPlan& plan, const Vector& d) {
  Vector q = near_field_apply(plan, d);
  q += far_field_apply(plan, d);
  return q;
}

Vector apply_dense_oracle(const Matrix& a, const Vector& d) {
  if (a.cols() != d.size())
    throw ArgumentError("apply_dense_oracle: dimension mismatch");
  Vector q(a.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (Index j = 0; j < a.cols(); ++j) acc += a(i, j) * d[j];
    q[i] = acc;
  }
  return q;
}

void save_plan(const FmmPlan& plan, const std::string& path) {
  const BoxTree& tree = plan.tree;
  const int leaf = tree.levels();
  const BoxId n_ids = level_offset(leaf + 1);

  detail::BinaryWriter w(path);
  w.magic(kPlanMagic);
  w.u32(kPlanVersion);
  w.u64(plan.m);
  w.u32(static_cast<std::uint32_t>(leaf));
  w.u32(static_cast<std::uint32_t>(plan.rank));
  w.u8(plan.symmetric_shortcut ? 1 : 0);
  const BoundingBox& bb = tree.bounds();
  w.f64(bb.lon_min);
  w.f64(bb.lon_max);
  w.f64(bb.lat_min);
  w.f64(bb.lat_max);

  // leaf index lists; parents are reconstructed as sorted unions on load
  for (BoxId b = tree.first_box(leaf); b < tree.end_box(leaf); ++b) {
    const std::vector<int>& idx = tree.box_indices(b);
    w.u64(idx.size());
    for (int i : idx) w.u32(static_cast<std::uint32_t>(i));
  }

  for (BoxId b = level_offset(2); b < n_ids; ++b) {
    const BoxFactors& f = plan.factors[static_cast<std::size_t>(b)];
    w.u32(static_cast<std::uint32_t>(f.rank));
    if (f.rank == 0) continue;
    for (Index k = 0; k < f.rank; ++k) w.f64(f.s_src[k]);
    for (Index k = 0; k < f.rank; ++k) w.f64(f.s_tgt[k]);
    write_matrix(w, f.v_src);
    write_matrix(w, f.u_tgt);
  }

  for (BoxId b = level_offset(3); b < n_ids; ++b) {
    const Matrix& t = plan.m2m[static_cast<std::size_t>(b)];
    w.u8(t.size() != 0 ? 1 : 0);
    if (t.size() != 0) write_matrix(w, t);
  }
  for (BoxId b = level_offset(3); b < n_ids; ++b) {
    const Matrix& t = plan.l2l[static_cast<std::size_t>(b)];
    w.u8(t.size() != 0 ? 1 : 0);
    if (t.size() != 0) write_matrix(w, t);
  }
  for (BoxId b = level_offset(2); b < n_ids; ++b) {
    const auto& lst = plan.m2l[static_cast<std::size_t>(b)];
    w.u32(static_cast<std::uint32_t>(lst.size()));
    for (const auto& [src, t] : lst) {
      w.u32(static_cast<std::uint32_t>(src));
      write_matrix(w, t);
    }
  }
  for (BoxId b = tree.first_box(leaf); b < tree.end_box(leaf); ++b) {
    const auto& cols = plan.near_cols[static_cast<std::size_t>(b)];
    w.u32(static_cast<std::uint32_t>(cols.size()));
    for (int c : cols) w.u32(static_cast<std::uint32_t>(c));
    write_matrix(w, plan.near_block[static_cast<std::size_t>(b)]);
  }
  w.finish();
}

FmmPlan load_plan(const std::string& path) {
  detail::BinaryReader r(path);
  r.expect_magic(kPlanMagic);
  if (r.u32() != kPlanVersion)
    throw SerializationError("unsupported plan container version");

  const auto m = r.u64();
  const auto leaf = static_cast<int>(r.u32());
  const auto rank = static_cast<Index>(r.u32());
  const bool shortcut = r.u8() != 0;
  if (leaf < 3 || leaf > 15 || m == 0 || rank < 1)
    throw SerializationError("implausible plan header");
  BoundingBox bb;
  bb.lon_min = r.f64();
  bb.lon_max = r.f64();
  bb.lat_min = r.f64();
  bb.lat_max = r.f64();

  const auto n_leaves = static_cast<std::size_t>(1) << (2 * leaf);
  std::vector<std::vector<int>> leaf_lists(n_leaves);
  for (std::size_t i = 0; i < n_leaves; ++i) {
    const auto count = r.u64();
    if (count > m) throw SerializationError("implausible leaf occupancy");
    leaf_lists[i].resize(count);
    for (auto& v : leaf_lists[i]) v = static_cast<int>(r.u32());
  }

  FmmPlan plan;
  plan.tree = BoxTree::from_leaf_lists(leaf, bb, std::move(leaf_lists),
                                       static_cast<std::size_t>(m));
  plan.rank = rank;
  plan.symmetric_shortcut = shortcut;
  plan.m = m;

  const BoxId n_ids = level_offset(leaf + 1);
  plan.factors.resize(static_cast<std::size_t>(n_ids));
  plan.m2m.resize(static_cast<std::size_t>(n_ids));
  plan.l2l.resize(static_cast<std::size_t>(n_ids));
  plan.m2l.resize(static_cast<std::size_t>(n_ids));
  plan.near_block.resize(static_cast<std::size_t>(n_ids));
  plan.near_cols.resize(static_cast<std::size_t>(n_ids));

  for (BoxId b = level_offset(2); b < n_ids; ++b) {
    BoxFactors& f = plan.factors[static_cast<std::size_t>(b)];
    f.rank = static_cast<Index>(r.u32());
    if (f.rank == 0) continue;
    f.s_src.resize(f.rank);
    f.s_tgt.resize(f.rank);
    for (Index k = 0; k < f.rank; ++k) f.s_src[k] = r.f64();
    for (Index k = 0; k < f.rank; ++k) f.s_tgt[k] = r.f64();
    f.v_src = read_matrix(r);
    f.u_tgt = read_matrix(r);
    if (f.v_src.cols() != f.rank || f.u_tgt.cols() != f.rank ||
        f.v_src.rows() != static_cast<Index>(plan.tree.box_indices(b).size()))
      throw SerializationError("factor record does not match tree layout");
  }

  for (BoxId b = level_offset(3); b < n_ids; ++b)
    if (r.u8() != 0) plan.m2m[static_cast<std::size_t>(b)] = read_matrix(r);
  for (BoxId b = level_offset(3); b < n_ids; ++b)
    if (r.u8() != 0) plan.l2l[static_cast<std::size_t>(b)] = read_matrix(r);
  for (BoxId b = level_offset(2); b < n_ids; ++b) {
    const auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      const auto src = static_cast<BoxId>(r.u32());
      if (src < level_offset(2) || src >= n_ids)
        throw SerializationError("bad interaction source id in plan container");
      plan.m2l[static_cast<std::size_t>(b)].emplace_back(src, read_matrix(r));
    }
  }
  for (BoxId b = plan.tree.first_box(leaf); b < plan.tree.end_box(leaf); ++b) {
    const auto count = r.u32();
    auto& cols = plan.near_cols[static_cast<std::size_t>(b)];
    cols.resize(count);
    for (auto& c : cols) c = static_cast<int>(r.u32());
    plan.near_block[static_cast<std::size_t>(b)] = read_matrix(r);
  }
  if (!r.at_end()) throw SerializationError("trailing bytes in plan container");
  return plan;
}

}  // namespace covfmm
