#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "dendromap/error.hpp"
#include "dendromap/treemap.hpp"
#include "layout_checks.hpp"
#include "oracles.hpp"

using namespace dendromap;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Parse;
}

LayoutConfig small_images(std::int64_t size, std::int64_t padding, std::int64_t header) {
  LayoutConfig c;
  c.image_w = c.image_h = size;
  c.padding = padding;
  c.header_h = header;
  return c;
}

}  // namespace

TEST_CASE("partition of 100x90 with 6 and 4 images") {
  const auto c = small_images(10, 10, 0);
  const auto p = partition({0, 0, 100, 90}, 6, 4, c);
  CHECK(p.axis == SplitAxis::Dice);
  CHECK(p.ratio == 0.6);
  CHECK(p.fit == 10);
  CHECK(p.left_cells == 6);
  CHECK(p.left_outer == Rect{0, 0, 60, 90});
  CHECK(p.right_outer == Rect{60, 0, 40, 90});
  CHECK(p.left == Rect{10, 10, 40, 70});
  CHECK(p.right == Rect{70, 10, 20, 70});
}

TEST_CASE("partition slices tall rects and clamps tiny shares") {
  const auto c = small_images(10, 0, 0);
  const auto p = partition({0, 0, 50, 100}, 1, 99, c);
  CHECK(p.axis == SplitAxis::Slice);
  CHECK(p.fit == 10);
  CHECK(p.left_cells == 1);
  CHECK(p.left_outer == Rect{0, 0, 50, 10});
  const auto q = partition({0, 0, 50, 100}, 99, 1, c);
  CHECK(q.left_cells == 9);
}

TEST_CASE("partition with an empty side") {
  const auto c = small_images(10, 5, 0);
  const auto p = partition({0, 0, 100, 90}, 3, 0, c);
  CHECK(p.left_outer == Rect{0, 0, 100, 90});
  CHECK(p.right.area() == 0);
  const auto q = partition({0, 0, 100, 90}, 0, 3, c);
  CHECK(q.left.area() == 0);
  CHECK(q.right_outer == Rect{0, 0, 100, 90});
}

TEST_CASE("partition errors") {
  const auto c = small_images(10, 0, 0);
  CHECK(code_of([&] { partition({0, 0, 9, 90}, 1, 1, c); }) == ErrorCode::DegenerateSpace);
  CHECK(code_of([&] { partition({0, 0, 15, 10}, 1, 1, c); }) == ErrorCode::DegenerateSpace);
  CHECK(code_of([&] { partition({0, 0, 100, 90}, 0, 0, c); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("capacity") {
  CHECK(capacity({0, 0, 100, 90}, small_images(10, 0, 10)) == 80);
  CHECK(capacity({0, 0, 9, 9}, small_images(10, 0, 0)) == 0);
  CHECK(capacity({0, 0, 20, 20}, small_images(10, 0, 0)) == 4);
  CHECK(capacity({0, 0, 100, 15}, small_images(10, 0, 10)) == 0);
}

TEST_CASE("sampling is evenly strided") {
  const std::vector<ImageId> ten{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK(sample_images(ten, 5) == std::vector<ImageId>{0, 2, 4, 6, 8});
  CHECK(sample_images(ten, 10) == ten);
  CHECK(sample_images(ten, 50) == ten);
  CHECK(sample_images({0, 1, 2, 3, 4, 5}, 4) == std::vector<ImageId>{0, 1, 3, 4});
  CHECK(sample_images(ten, 0).empty());
}

TEST_CASE("k=1 fills the viewport") {
  std::mt19937_64 rng(1);
  const auto tree = oracle::random_tree(rng, 50);
  const LayoutConfig c;
  const auto out = zoom(tree, tree.root(), 1, c);
  CHECK(out.root.is_cut_leaf);
  CHECK(out.root.rect == Rect{0, 0, c.viewport_w, c.viewport_h});
  CHECK(out.root.placements.size() == 50);
  REQUIRE(out.root.header);
  CHECK(out.root.header->image_count == 50);
  CHECK_FALSE(out.root.header->accuracy);
}

TEST_CASE("balanced four-leaf tree gives a 2x2 arrangement") {
  const auto tree = Dendrogram::from_merges(4, {{0, 1, 1.0}, {2, 3, 2.0}, {4, 5, 3.0}});
  LayoutConfig c = small_images(10, 0, 0);
  c.viewport_w = c.viewport_h = 100;
  const auto out = zoom(tree, tree.root(), 4, c);
  REQUIRE(out.root.children.size() == 2);
  const auto& left = out.root.children[0];
  const auto& right = out.root.children[1];
  CHECK(left.rect == Rect{0, 0, 50, 100});
  CHECK(right.rect == Rect{50, 0, 50, 100});
  CHECK(left.children[0].rect == Rect{0, 0, 50, 50});
  CHECK(left.children[1].rect == Rect{0, 50, 50, 50});
  CHECK(right.children[0].rect == Rect{50, 0, 50, 50});
  CHECK(right.children[1].rect == Rect{50, 50, 50, 50});
  CHECK(out.root.depth_remaining == 2);
  CHECK(left.children[0].depth_remaining == 0);
}

TEST_CASE("eight clusters with the default configuration") {
  std::mt19937_64 rng(2);
  const auto tree = ward_dendrogram(oracle::random_points(rng, 300, 4));
  const LayoutConfig c;
  const auto out = zoom(tree, tree.root(), 8, c);
  const auto result = layout_checks::check(tree, out);
  CHECK(result.violations.empty());
  CHECK(result.cut_leaves == 8);
}

TEST_CASE("labels supply accuracy and misclassification flags") {
  const auto tree = Dendrogram::from_merges(2, {{0, 1, 1.0}});
  DatasetManifest labels;
  labels.classes = {"a", "b"};
  labels.has_predictions = true;
  labels.items = {{0, "", 0, 0, 0}, {1, "", 0, 1, 1}};
  const auto out = zoom(tree, tree.root(), 1, LayoutConfig{}, &labels);
  REQUIRE(out.root.header->accuracy);
  CHECK(*out.root.header->accuracy == 0.5);
  CHECK(out.root.placements[0].misclassified == false);
  CHECK(out.root.placements[1].misclassified == true);
}

TEST_CASE("zoom lays a subtree out over the full viewport") {
  std::mt19937_64 rng(4);
  const auto tree = oracle::random_tree(rng, 40);
  const auto child = tree.node(tree.root()).left;
  const LayoutConfig c;
  const auto out = zoom(tree, child, 6, c);
  CHECK(out.zoom_root == child);
  CHECK(out.k == std::min<std::size_t>(6, tree.node(child).leaf_count));
  CHECK(out.root.rect == Rect{0, 0, c.viewport_w, c.viewport_h});
  const auto manual = layout(tree, subtree_cut(tree, child, out.k), c, child);
  CHECK(layout_to_json(manual) == layout_to_json(out));
}

TEST_CASE("layout validates the cut") {
  const auto tree = Dendrogram::from_merges(4, {{0, 1, 1.0}, {2, 3, 2.0}, {4, 5, 3.0}});
  const LayoutConfig c;
  CHECK(code_of([&] { layout(tree, {2, {4, 4}}, c); }) == ErrorCode::Validation);
  CHECK(code_of([&] { layout(tree, {2, {4, 0}}, c); }) == ErrorCode::Validation);
  CHECK(code_of([&] { layout(tree, {1, {4}}, c, 5); }) == ErrorCode::Validation);
  LayoutConfig bad = c;
  bad.image_w = 0;
  CHECK(code_of([&] { layout(tree, {1, {6}}, bad); }) == ErrorCode::InvalidArgument);
  LayoutConfig tiny = small_images(40, 10, 20);
  tiny.viewport_w = tiny.viewport_h = 80;
  CHECK(code_of([&] { zoom(tree, 6, 4, tiny); }) == ErrorCode::DegenerateSpace);
}

TEST_CASE("random layouts keep every invariant") {
  std::mt19937_64 rng(99);
  std::size_t laid_out = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = layout_checks::random_config(rng);
    std::uniform_int_distribution<std::size_t> size(1, 200);
    const auto tree = oracle::random_tree(rng, size(rng));
    std::uniform_int_distribution<std::size_t> kdist(1, std::min<std::size_t>(tree.leaf_count(), 12));
    try {
      const auto out = zoom(tree, tree.root(), kdist(rng), c);
      const auto result = layout_checks::check(tree, out);
      CHECK(result.violations.empty());
      if (!result.violations.empty()) MESSAGE(result.violations.front());
      ++laid_out;
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateSpace);
    }
  }
  CHECK(laid_out > 100);
}

TEST_CASE("layout json is stable") {
  std::mt19937_64 rng(6);
  const auto tree = oracle::random_tree(rng, 30);
  const auto a = layout_to_json(zoom(tree, tree.root(), 5, LayoutConfig{}));
  const auto b = layout_to_json(zoom(tree, tree.root(), 5, LayoutConfig{}));
  CHECK(a == b);
  CHECK(a.find("\"is_cut_leaf\":true") != std::string::npos);
}
