#include <algorithm>
#include <cstdint>
#include <limits>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "covfmm/box_tree.hpp"
#include "covfmm/experiment.hpp"

using namespace covfmm;

namespace {

ObservationSet default_obs() { return generate_grid(GridSpec{}); }

}  // namespace

TEST_SUITE("boxtree") {

TEST_CASE("level offsets and level lookup") {
  CHECK(level_offset(1) == 0);
  CHECK(level_offset(2) == 4);
  CHECK(level_offset(3) == 20);
  CHECK(level_offset(4) == 84);
  CHECK(box_level(0) == 1);
  CHECK(box_level(3) == 1);
  CHECK(box_level(4) == 2);
  CHECK(box_level(19) == 2);
  CHECK(box_level(20) == 3);
  CHECK(box_level(83) == 3);
  CHECK_THROWS_AS(box_level(-1), ArgumentError);
  CHECK_THROWS_AS(level_offset(0), ArgumentError);
}

TEST_CASE("coordinate encoding round trips") {
  for (int level = 1; level <= 4; ++level) {
    for (BoxId b = level_offset(level); b < level_offset(level + 1); ++b) {
      const GridCoord c = box_coord(b);
      CHECK(box_at(level, c.x, c.y) == b);
      CHECK(c.x < (1u << level));
      CHECK(c.y < (1u << level));
    }
  }
  // local id 1 is one step along the longitude axis, 2 along latitude
  CHECK(box_coord(1).x == 1);
  CHECK(box_coord(1).y == 0);
  CHECK(box_coord(2).x == 0);
  CHECK(box_coord(2).y == 1);
  CHECK_THROWS_AS(box_at(2, 4, 0), ArgumentError);
}

TEST_CASE("worked neighbourhood examples hold exactly") {
  const BoxTree tree = build_tree(default_obs(), 3);

  CHECK(tree.children(4) == std::vector<BoxId>{20, 21, 22, 23});
  for (BoxId c : {20, 21, 22, 23}) CHECK(tree.parent(c) == 4);

  CHECK(tree.near_field(16) ==
        std::vector<BoxId>{7, 10, 11, 13, 15, 16, 17, 18, 19});
  CHECK(tree.far_field(16) == std::vector<BoxId>{4, 5, 6, 8, 9, 12, 14});
  CHECK(tree.interaction_list(16) == tree.far_field(16));

  CHECK(tree.interaction_list(68) ==
        std::vector<BoxId>{32, 33, 34, 44, 45, 48, 49, 50, 51, 56, 58, 64, 65,
                           66, 67, 72, 73, 74, 75, 76, 77, 78, 79, 80, 81, 82,
                           83});
  CHECK(tree.near_field(68) ==
        std::vector<BoxId>{35, 46, 47, 57, 59, 68, 69, 70, 71});
}

TEST_CASE("near field sizes range from 4 to 9") {
  const BoxTree tree = build_tree(default_obs(), 3);
  for (int level = 2; level <= 3; ++level) {
    for (BoxId b = tree.first_box(level); b < tree.end_box(level); ++b) {
      const std::size_t n = tree.near_field(b).size();
      CHECK(n >= 4);
      CHECK(n <= 9);
    }
  }
  CHECK(tree.near_field(20).size() == 4);  // corner box
}

TEST_CASE("interaction list has at most 27 members and avoids the near field") {
  const BoxTree tree = build_tree(default_obs(), 3);
  for (BoxId b = tree.first_box(3); b < tree.end_box(3); ++b) {
    const std::vector<BoxId> lst = tree.interaction_list(b);
    CHECK(lst.size() <= 27);
    const std::vector<BoxId> near = tree.near_field(b);
    for (BoxId s : lst) {
      CHECK_FALSE(std::binary_search(near.begin(), near.end(), s));
      CHECK(box_level(s) == 3);
    }
  }
}

TEST_CASE("binning matches independent integer arithmetic on the default grid") {
  const GridSpec spec;
  const BoxTree tree = build_tree(generate_grid(spec), 3);
  CHECK(tree.observation_count() == 3456);
  // row-major observation index i*72 + j sits at latitude row i, longitude
  // column j; with 8 bins per axis the expected cell follows from exact
  // integer arithmetic
  for (int i = 0; i < spec.lat_count; ++i) {
    for (int j = 0; j < spec.lon_count; ++j) {
      const int obs = i * spec.lon_count + j;
      const auto x = static_cast<std::uint32_t>(std::min(8 * j / 71, 7));
      const auto y = static_cast<std::uint32_t>(std::min(8 * i / 47, 7));
      const BoxId expect = box_at(3, x, y);
      const auto& idx = tree.box_indices(expect);
      CHECK(std::binary_search(idx.begin(), idx.end(), obs));
    }
  }
}

TEST_CASE("every observation lands in exactly one leaf and lists nest") {
  const BoxTree tree = build_tree(default_obs(), 3);
  std::vector<int> seen;
  for (BoxId b = tree.first_box(3); b < tree.end_box(3); ++b) {
    const auto& idx = tree.box_indices(b);
    CHECK(std::is_sorted(idx.begin(), idx.end()));
    seen.insert(seen.end(), idx.begin(), idx.end());
  }
  std::sort(seen.begin(), seen.end());
  CHECK(seen.size() == tree.observation_count());
  for (std::size_t i = 0; i < seen.size(); ++i) CHECK(seen[i] == static_cast<int>(i));

  // a parent's list is the union of its children's lists
  for (int level = 1; level < 3; ++level) {
    for (BoxId b = tree.first_box(level); b < tree.end_box(level); ++b) {
      std::vector<int> merged;
      for (BoxId c : tree.children(b)) {
        const auto& idx = tree.box_indices(c);
        merged.insert(merged.end(), idx.begin(), idx.end());
      }
      std::sort(merged.begin(), merged.end());
      CHECK(merged == tree.box_indices(b));
    }
  }
}

TEST_CASE("boundary observations bin left-closed with closed maximum edges") {
  ObservationSet obs;
  // domain [0,8]x[0,8] with 8 bins per axis at level 3
  obs.lat_deg = {0.0, 4.0, 8.0, 0.0};
  obs.lon_deg = {0.0, 4.0, 8.0, 7.9999};
  const BoundingBox bb{0.0, 8.0, 0.0, 8.0};
  const BoxTree tree = build_tree(obs, 3, bb);
  CHECK(tree.box_indices(box_at(3, 0, 0)) == std::vector<int>{0});
  CHECK(tree.box_indices(box_at(3, 4, 4)) == std::vector<int>{1});  // interior edge goes up
  CHECK(tree.box_indices(box_at(3, 7, 7)) == std::vector<int>{2});  // max edge closed
  CHECK(tree.box_indices(box_at(3, 7, 0)) == std::vector<int>{3});
}

TEST_CASE("build_tree validates its inputs") {
  ObservationSet obs;
  obs.lat_deg = {0.0, 1.0};
  obs.lon_deg = {0.0, 1.0};
  CHECK_THROWS_AS(build_tree(obs, 2), ArgumentError);
  CHECK_THROWS_AS(build_tree(obs, 16), ArgumentError);
  CHECK_THROWS_AS(build_tree(ObservationSet{}, 3), ArgumentError);

  ObservationSet ragged;
  ragged.lat_deg = {0.0, 1.0};
  ragged.lon_deg = {0.0};
  CHECK_THROWS_AS(build_tree(ragged, 3), ArgumentError);

  CHECK_THROWS_AS(build_tree(obs, 3, BoundingBox{0.0, 0.5, 0.0, 2.0}),
                  DomainError);  // point outside
  CHECK_THROWS_AS(build_tree(obs, 3, BoundingBox{0.0, 1.0, 0.0, 0.0}),
                  DomainError);  // zero height

  ObservationSet line;  // zero width rectangle from the data itself
  line.lat_deg = {0.0, 1.0};
  line.lon_deg = {2.0, 2.0};
  CHECK_THROWS_AS(build_tree(line, 3), DomainError);

  ObservationSet bad;
  bad.lat_deg = {0.0, std::numeric_limits<double>::quiet_NaN()};
  bad.lon_deg = {0.0, 1.0};
  CHECK_THROWS_AS(build_tree(bad, 3), DomainError);
}

TEST_CASE("indices_of concatenates in ascending box order and validates") {
  const BoxTree tree = build_tree(default_obs(), 3);
  const std::vector<int> got = tree.indices_of({21, 20});
  std::vector<int> expect = tree.box_indices(20);
  const auto& second = tree.box_indices(21);
  expect.insert(expect.end(), second.begin(), second.end());
  CHECK(got == expect);
  CHECK(tree.indices_of({}).empty());
  CHECK_THROWS_AS(tree.indices_of({20, 20}), ArgumentError);
  CHECK_THROWS_AS(tree.indices_of({4, 20}), ArgumentError);
}

TEST_CASE("children and parent respect level bounds") {
  const BoxTree tree = build_tree(default_obs(), 3);
  CHECK_THROWS_AS(tree.children(20), ArgumentError);  // leaf
  CHECK_THROWS_AS(tree.parent(0), ArgumentError);     // level 1
  CHECK_THROWS_AS(tree.children(84), ArgumentError);  // beyond the tree
  CHECK_THROWS_AS(tree.interaction_list(0), ArgumentError);
}

TEST_CASE("summary lists one line per box with occupancy") {
  const BoxTree tree = build_tree(default_obs(), 3);
  const std::string text = tree.summary();
  std::istringstream is(text);
  std::string line;
  std::size_t lines = 0, total = 0;
  while (std::getline(is, line)) {
    ++lines;
    std::istringstream fields(line);
    long id, level, x, y, occ;
    fields >> id >> level >> x >> y >> occ;
    CHECK(fields);
    if (level == 3) total += static_cast<std::size_t>(occ);
  }
  CHECK(lines == 4 + 16 + 64);
  CHECK(total == tree.observation_count());
}

TEST_CASE("suggest_levels tracks the leaf occupancy cap") {
  CHECK(suggest_levels(1) == 3);
  CHECK(suggest_levels(3456) == 3);
  CHECK(suggest_levels(64 * 64) == 3);
  CHECK(suggest_levels(64 * 64 + 1) == 4);
  CHECK(suggest_levels(64 * 256 + 1) == 5);
  CHECK(suggest_levels(100, 1) == 4);
  CHECK_THROWS_AS(suggest_levels(0), ArgumentError);
  CHECK_THROWS_AS(suggest_levels(10, 0), ArgumentError);
}

TEST_CASE("from_leaf_lists rebuilds an identical tree") {
  const BoxTree tree = build_tree(default_obs(), 3);
  std::vector<std::vector<int>> leaves;
  for (BoxId b = tree.first_box(3); b < tree.end_box(3); ++b)
    leaves.push_back(tree.box_indices(b));
  const BoxTree rebuilt = BoxTree::from_leaf_lists(
      3, tree.bounds(), leaves, tree.observation_count());
  for (int level = 1; level <= 3; ++level)
    for (BoxId b = tree.first_box(level); b < tree.end_box(level); ++b)
      CHECK(rebuilt.box_indices(b) == tree.box_indices(b));

  // partition violations are rejected
  auto broken = leaves;
  broken[0].push_back(0);
  CHECK_THROWS_AS(
      BoxTree::from_leaf_lists(3, tree.bounds(), broken, tree.observation_count()),
      ArgumentError);
  auto missing = leaves;
  missing.back().clear();
  CHECK_THROWS_AS(
      BoxTree::from_leaf_lists(3, tree.bounds(), missing, tree.observation_count()),
      ArgumentError);
  CHECK_THROWS_AS(BoxTree::from_leaf_lists(3, tree.bounds(), {},
                                           tree.observation_count()),
                  ArgumentError);
}

}  // TEST_SUITE
