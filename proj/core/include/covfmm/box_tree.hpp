#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "covfmm/errors.hpp"

namespace covfmm {

// Point observations on the sphere, addressed by dense index 0..m-1.
struct ObservationSet {
  std::vector<double> lat_deg;
  std::vector<double> lon_deg;
  std::size_t size() const { return lat_deg.size(); }
};

using BoxId = int;

struct BoundingBox {
  double lon_min = 0.0, lon_max = 0.0;
  double lat_min = 0.0, lat_max = 0.0;
};

struct GridCoord {
  std::uint32_t x = 0, y = 0;
};

//
// Cross-level box numbering.  Level l occupies ids [(4^l - 4)/3, (4^{l+1} - 4)/3):
// level 1 is 0..3, level 2 is 4..19, level 3 is 20..83.  The root box is not
// numbered.  Within a level, boxes are in Z order with the x (longitude) axis
// in the even interleave bits, so local id 1 is (x,y) = (1,0) and local id 2
// is (0,1).  children(b) = {4b+4 .. 4b+7}, parent(b) = floor((b-4)/4) at any
// level, independent of the interleave convention.
//

int level_offset(int level);        // first id at a level, level >= 1
int box_level(BoxId b);             // b >= 0
GridCoord box_coord(BoxId b);       // Z-order decode within the level grid
BoxId box_at(int level, std::uint32_t x, std::uint32_t y);

//
// Fixed-depth quadtree over the observations' bounding rectangle.  Binning is
// left-closed right-open per axis, except that the maximum edges of the
// domain are closed; an observation exactly on an interior boundary lands in
// the box with the larger grid coordinate.  Empty boxes are legal and keep
// empty index lists.
//

class BoxTree {
 public:
  int levels() const { return levels_; }  // leaf level, >= 3
  std::size_t observation_count() const { return m_; }
  const BoundingBox& bounds() const { return bounds_; }

  BoxId first_box(int level) const;  // == level_offset(level), validated
  BoxId end_box(int level) const;    // one past the last id at level

  // {4b+4..4b+7}; throws ArgumentError at the leaf level
  std::vector<BoxId> children(BoxId b) const;
  // floor((b-4)/4); throws ArgumentError at level 1
  BoxId parent(BoxId b) const;

  // b plus the same-level boxes touching it (edge or corner); sorted by id,
  // size 4..9 on grids of 4x4 or larger
  std::vector<BoxId> near_field(BoxId b) const;
  // same-level complement of the near field; sorted by id
  std::vector<BoxId> far_field(BoxId b) const;
  // children of the parent's near field minus the own near field; sorted.
  // At level 2 this equals far_field(b) because all level-1 boxes touch.
  std::vector<BoxId> interaction_list(BoxId b) const;

  // observation indices of box b, ascending
  const std::vector<int>& box_indices(BoxId b) const;
  // concatenation of per-box lists in ascending BoxId order; all boxes must
  // share one level and be distinct
  std::vector<int> indices_of(const std::vector<BoxId>& boxes) const;

  // one line per box over levels 1..leaf:
  // id <tab> level <tab> x <tab> y <tab> occupancy
  std::string summary() const;

  // Rebuild a tree from its leaf-level index lists, one ascending list per
  // leaf box in Z order; parents become sorted unions of their children.
  // Deserialization plumbing: the lists must partition 0..count-1.
  static BoxTree from_leaf_lists(int levels, const BoundingBox& bounds,
                                 std::vector<std::vector<int>> leaf_lists,
                                 std::size_t count);

 private:
  friend BoxTree build_tree(const ObservationSet&, int, std::optional<BoundingBox>);

  void require_box(BoxId b) const;

  int levels_ = 0;
  std::size_t m_ = 0;
  BoundingBox bounds_{};
  // [level][local Z-order id] -> ascending observation indices; level 0 unused
  std::vector<std::vector<std::vector<int>>> lists_;
};

// levels >= 3 (and <= 15).  bounds, when given, must contain every
// observation; by default the minimal bounding rectangle is used.  Throws
// DomainError when the rectangle has zero width or height.
BoxTree build_tree(const ObservationSet& obs, int levels,
                   std::optional<BoundingBox> bounds = {});

// smallest L >= 3 with average leaf occupancy m / 4^L <= leaf_cap
int suggest_levels(std::size_t observation_count, std::size_t leaf_cap = 64);

}  // namespace covfmm
