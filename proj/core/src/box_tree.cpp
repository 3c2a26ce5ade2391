#include "covfmm/box_tree.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <sstream>

namespace covfmm {

namespace {

constexpr int kMaxLevels = 15;

// spread the low 16 bits of v so bit i lands at position 2i
std::uint32_t spread_bits(std::uint32_t v) {
  v &= 0xffffu;
  v = (v | (v << 8)) & 0x00ff00ffu;
  v = (v | (v << 4)) & 0x0f0f0f0fu;
  v = (v | (v << 2)) & 0x33333333u;
  v = (v | (v << 1)) & 0x55555555u;
  return v;
}

// inverse of spread_bits: collect even-position bits
std::uint32_t squeeze_bits(std::uint32_t v) {
  v &= 0x55555555u;
  v = (v | (v >> 1)) & 0x33333333u;
  v = (v | (v >> 2)) & 0x0f0f0f0fu;
  v = (v | (v >> 4)) & 0x00ff00ffu;
  v = (v | (v >> 8)) & 0x0000ffffu;
  return v;
}

std::uint32_t morton(std::uint32_t x, std::uint32_t y) {
  return spread_bits(x) | (spread_bits(y) << 1);
}

}  // namespace

int level_offset(int level) {
  if (level < 1 || level > kMaxLevels + 1)
    throw ArgumentError("level_offset: level out of range");
  return static_cast<int>(((1u << (2 * level)) - 4) / 3);
}

int box_level(BoxId b) {
  if (b < 0) throw ArgumentError("box_level: negative box id");
  int level = 1;
  while (b >= level_offset(level + 1)) ++level;
  return level;
}

GridCoord box_coord(BoxId b) {
  const int level = box_level(b);
  const auto local = static_cast<std::uint32_t>(b - level_offset(level));
  return {squeeze_bits(local), squeeze_bits(local >> 1)};
}

BoxId box_at(int level, std::uint32_t x, std::uint32_t y) {
  const auto n = 1u << level;
  if (x >= n || y >= n) throw ArgumentError("box_at: grid coordinate out of range");
  return level_offset(level) + static_cast<BoxId>(morton(x, y));
}

BoxId BoxTree::first_box(int level) const {
  if (level < 1 || level > levels_)
    throw ArgumentError("first_box: level out of range");
  return level_offset(level);
}

BoxId BoxTree::end_box(int level) const {
  if (level < 1 || level > levels_)
    throw ArgumentError("end_box: level out of range");
  return level_offset(level + 1);
}

void BoxTree::require_box(BoxId b) const {
  if (b < 0 || b >= level_offset(levels_ + 1))
    throw ArgumentError("box id " + std::to_string(b) + " does not exist in this tree");
}

std::vector<BoxId> BoxTree::children(BoxId b) const {
  require_box(b);
  if (box_level(b) == levels_)
    throw ArgumentError("children: box " + std::to_string(b) + " is at the leaf level");
  return {4 * b + 4, 4 * b + 5, 4 * b + 6, 4 * b + 7};
}

BoxId BoxTree::parent(BoxId b) const {
  require_box(b);
  if (box_level(b) == 1)
    throw ArgumentError("parent: box " + std::to_string(b) + " is at level 1");
  return (b - 4) / 4;
}

std::vector<BoxId> BoxTree::near_field(BoxId b) const {
  require_box(b);
  const int level = box_level(b);
  const auto n = 1u << level;
  const GridCoord c = box_coord(b);
  std::vector<BoxId> out;
  out.reserve(9);
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      const long x = static_cast<long>(c.x) + dx;
      const long y = static_cast<long>(c.y) + dy;
      if (x < 0 || y < 0 || x >= static_cast<long>(n) || y >= static_cast<long>(n))
        continue;
      out.push_back(box_at(level, static_cast<std::uint32_t>(x),
                           static_cast<std::uint32_t>(y)));
    }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<BoxId> BoxTree::far_field(BoxId b) const {
  const std::vector<BoxId> near = near_field(b);
  const int level = box_level(b);
  std::vector<BoxId> out;
  out.reserve(static_cast<std::size_t>(level_offset(level + 1) - level_offset(level)));
  auto it = near.begin();
  for (BoxId id = level_offset(level); id < level_offset(level + 1); ++id) {
    if (it != near.end() && *it == id) {
      ++it;
      continue;
    }
    out.push_back(id);
  }
  return out;
}

std::vector<BoxId> BoxTree::interaction_list(BoxId b) const {
  require_box(b);
  if (box_level(b) < 2)
    throw ArgumentError("interaction_list: box must be at level 2 or deeper");
  const std::vector<BoxId> near = near_field(b);
  std::vector<BoxId> out;
  out.reserve(27);
  for (BoxId pn : near_field(parent(b)))
    for (BoxId c = 4 * pn + 4; c <= 4 * pn + 7; ++c)
      if (!std::binary_search(near.begin(), near.end(), c)) out.push_back(c);
  std::sort(out.begin(), out.end());
  return out;
}

const std::vector<int>& BoxTree::box_indices(BoxId b) const {
  require_box(b);
  const int level = box_level(b);
  return lists_[level][static_cast<std::size_t>(b - level_offset(level))];
}

std::vector<int> BoxTree::indices_of(const std::vector<BoxId>& boxes) const {
  if (boxes.empty()) return {};
  std::vector<BoxId> sorted = boxes;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ArgumentError("indices_of: duplicate box id");
  const int level = box_level(sorted.front());
  if (box_level(sorted.back()) != level)
    throw ArgumentError("indices_of: boxes span multiple levels");
  std::vector<int> out;
  for (BoxId b : sorted) {
    const auto& idx = box_indices(b);
    out.insert(out.end(), idx.begin(), idx.end());
  }
  return out;
}

std::string BoxTree::summary() const {
  std::ostringstream os;
  for (int level = 1; level <= levels_; ++level) {
    for (BoxId b = level_offset(level); b < level_offset(level + 1); ++b) {
      const GridCoord c = box_coord(b);
      os << b << '\t' << level << '\t' << c.x << '\t' << c.y << '\t'
         << box_indices(b).size() << '\n';
    }
  }
  return os.str();
}

BoxTree BoxTree::from_leaf_lists(int levels, const BoundingBox& bounds,
                                 std::vector<std::vector<int>> leaf_lists,
                                 std::size_t count) {
  if (levels < 3 || levels > kMaxLevels)
    throw ArgumentError("from_leaf_lists: levels out of range");
  const std::size_t n_leaves = static_cast<std::size_t>(1) << (2 * levels);
  if (leaf_lists.size() != n_leaves)
    throw ArgumentError("from_leaf_lists: wrong number of leaf lists");

  std::vector<char> seen(count, 0);
  std::size_t total = 0;
  for (const auto& lst : leaf_lists) {
    long prev = -1;
    for (int v : lst) {
      if (v < 0 || static_cast<std::size_t>(v) >= count || v <= prev ||
          seen[static_cast<std::size_t>(v)])
        throw ArgumentError("from_leaf_lists: lists do not partition the index range");
      seen[static_cast<std::size_t>(v)] = 1;
      prev = v;
      ++total;
    }
  }
  if (total != count)
    throw ArgumentError("from_leaf_lists: lists do not partition the index range");

  BoxTree tree;
  tree.levels_ = levels;
  tree.m_ = count;
  tree.bounds_ = bounds;
  tree.lists_.resize(static_cast<std::size_t>(levels) + 1);
  tree.lists_[static_cast<std::size_t>(levels)] = std::move(leaf_lists);
  // children of local id q live at local ids 4q..4q+3 one level down
  for (int l = levels - 1; l >= 1; --l) {
    auto& cur = tree.lists_[static_cast<std::size_t>(l)];
    const auto& below = tree.lists_[static_cast<std::size_t>(l) + 1];
    cur.resize(1u << (2 * l));
    for (std::size_t local = 0; local < cur.size(); ++local) {
      std::vector<int> merged;
      for (std::size_t c = 4 * local; c < 4 * local + 4; ++c) {
        std::vector<int> next;
        next.reserve(merged.size() + below[c].size());
        std::merge(merged.begin(), merged.end(), below[c].begin(), below[c].end(),
                   std::back_inserter(next));
        merged = std::move(next);
      }
      cur[local] = std::move(merged);
    }
  }
  return tree;
}

BoxTree build_tree(const ObservationSet& obs, int levels,
                   std::optional<BoundingBox> bounds) {
  if (levels < 3 || levels > kMaxLevels)
    throw ArgumentError("build_tree: levels must be in [3, " +
                        std::to_string(kMaxLevels) + "]");
  const std::size_t m = obs.size();
  if (m == 0) throw ArgumentError("build_tree: empty observation set");
  if (obs.lon_deg.size() != m)
    throw ArgumentError("build_tree: lat/lon length mismatch");

  BoundingBox bb;
  if (bounds) {
    bb = *bounds;
  } else {
    bb.lon_min = bb.lon_max = obs.lon_deg[0];
    bb.lat_min = bb.lat_max = obs.lat_deg[0];
    for (std::size_t i = 1; i < m; ++i) {
      bb.lon_min = std::min(bb.lon_min, obs.lon_deg[i]);
      bb.lon_max = std::max(bb.lon_max, obs.lon_deg[i]);
      bb.lat_min = std::min(bb.lat_min, obs.lat_deg[i]);
      bb.lat_max = std::max(bb.lat_max, obs.lat_deg[i]);
    }
  }
  for (double v : {bb.lon_min, bb.lon_max, bb.lat_min, bb.lat_max})
    if (!std::isfinite(v)) throw DomainError("build_tree: non-finite bounding box");
  const double w = bb.lon_max - bb.lon_min;
  const double h = bb.lat_max - bb.lat_min;
  if (!(w > 0.0) || !(h > 0.0))
    throw DomainError("build_tree: degenerate bounding rectangle");

  BoxTree tree;
  tree.levels_ = levels;
  tree.m_ = m;
  tree.bounds_ = bb;
  tree.lists_.resize(static_cast<std::size_t>(levels) + 1);
  for (int l = 1; l <= levels; ++l)
    tree.lists_[static_cast<std::size_t>(l)].resize(1u << (2 * l));

  for (std::size_t i = 0; i < m; ++i) {
    const double lon = obs.lon_deg[i];
    const double lat = obs.lat_deg[i];
    if (!std::isfinite(lon) || !std::isfinite(lat))
      throw DomainError("build_tree: non-finite observation coordinate");
    if (lon < bb.lon_min || lon > bb.lon_max || lat < bb.lat_min || lat > bb.lat_max)
      throw DomainError("build_tree: observation outside the given bounds");
    // unit coordinates in [0, 1]; scaling by 2^l below is exact, so child
    // bins always nest inside parent bins
    const double u = (lon - bb.lon_min) / w;
    const double v = (lat - bb.lat_min) / h;
    for (int l = 1; l <= levels; ++l) {
      const auto n = 1u << l;
      auto x = static_cast<std::uint32_t>(std::min<double>(std::floor(std::ldexp(u, l)),
                                                           static_cast<double>(n - 1)));
      auto y = static_cast<std::uint32_t>(std::min<double>(std::floor(std::ldexp(v, l)),
                                                           static_cast<double>(n - 1)));
      tree.lists_[static_cast<std::size_t>(l)][morton(x, y)].push_back(
          static_cast<int>(i));
    }
  }
  return tree;
}

int suggest_levels(std::size_t observation_count, std::size_t leaf_cap) {
  if (observation_count == 0) throw ArgumentError("suggest_levels: no observations");
  if (leaf_cap == 0) throw ArgumentError("suggest_levels: zero leaf cap");
  int level = 3;
  while (level < kMaxLevels &&
         observation_count > leaf_cap * (1ull << (2 * level)))
    ++level;
  return level;
}

}  // namespace covfmm
