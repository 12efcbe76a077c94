#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "dendromap/error.hpp"
#include "dendromap/hclust.hpp"
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

std::set<ImageId> leaf_set(const Dendrogram& tree, NodeId id) {
  const auto leaves = tree.leaves_under(id);
  return {leaves.begin(), leaves.end()};
}

// ((0,1),(2,3)) with heights 1, 2, 3.
Dendrogram balanced_four() {
  return Dendrogram::from_merges(4, {{0, 1, 1.0}, {2, 3, 2.0}, {4, 5, 3.0}});
}

}  // namespace

TEST_CASE("two points merge at their euclidean distance") {
  const auto tree = ward_dendrogram(EmbeddingMatrix(2, 2, {0, 0, 3, 4}));
  REQUIRE(tree.node_count() == 3);
  CHECK(tree.node(tree.root()).merge_height == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("three 1-D points follow the Ward recurrence") {
  const auto tree = ward_dendrogram(EmbeddingMatrix(3, 1, {0, 1, 10}));
  const auto& first = tree.node(3);
  CHECK(leaf_set(tree, 3) == std::set<ImageId>{0, 1});
  CHECK(first.merge_height == doctest::Approx(1.0));
  const double expected = std::sqrt((2.0 * 100 + 2.0 * 81 - 1.0) / 3.0);
  CHECK(tree.node(tree.root()).merge_height == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(10.9697).epsilon(1e-5));
}

TEST_CASE("single point is a lone leaf") {
  const auto tree = ward_dendrogram(EmbeddingMatrix(1, 3, {1, 2, 3}));
  CHECK(tree.node_count() == 1);
  CHECK(tree.root() == 0);
  CHECK(cut_k(tree, 1).node_ids == std::vector<NodeId>{0});
  CHECK(code_of([] { ward_dendrogram(EmbeddingMatrix()); }) == ErrorCode::EmptyInput);
}

TEST_CASE("nearest-neighbour chain matches the naive agglomeration") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto points = oracle::random_points(rng, 64, 8);
    const auto tree = ward_dendrogram(points);
    const auto expected = oracle::naive_ward(points);
    const auto got = oracle::clusters_of(tree);
    REQUIRE(got.size() == expected.size());
    for (const auto& merge : expected) {
      const auto it = got.find(merge.leaves);
      REQUIRE(it != got.end());
      CHECK(std::abs(it->second - merge.height) <= 1e-9);
    }
  }
}

TEST_CASE("tree structure invariants") {
  std::mt19937_64 rng(11);
  const auto tree = ward_dendrogram(oracle::random_points(rng, 40, 3));
  CHECK(tree.root() == 2 * 40 - 2);
  for (const auto& node : tree.nodes()) {
    if (node.is_leaf()) {
      CHECK(node.id < 40);
      continue;
    }
    const auto& l = tree.node(node.left);
    const auto& r = tree.node(node.right);
    CHECK(node.leaf_count == l.leaf_count + r.leaf_count);
    CHECK(l.parent == node.id);
    CHECK(r.parent == node.id);
    CHECK(node.left < node.id);
    CHECK(node.right < node.id);
    CHECK(node.merge_height >= l.merge_height);
    CHECK(node.merge_height >= r.merge_height);
    const auto ll = tree.leaves_under(node.left);
    const auto rl = tree.leaves_under(node.right);
    CHECK(*std::min_element(ll.begin(), ll.end()) < *std::min_element(rl.begin(), rl.end()));
  }
  for (std::size_t id = 41; id < tree.node_count(); ++id)
    CHECK(tree.node(id).merge_height >= tree.node(id - 1).merge_height);
  const auto& order = tree.leaf_order();
  CHECK(std::set<ImageId>(order.begin(), order.end()).size() == 40);
}

TEST_CASE("permuting the input permutes the leaves") {
  std::mt19937_64 rng(3);
  const auto points = oracle::random_points(rng, 30, 4);
  std::vector<std::size_t> perm(30);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> shuffled;
  for (const auto p : perm) shuffled.insert(shuffled.end(), points.row(p).begin(), points.row(p).end());
  const auto a = oracle::clusters_of(ward_dendrogram(points));
  const auto b = oracle::clusters_of(ward_dendrogram(EmbeddingMatrix(30, 4, shuffled)));
  for (const auto& [leaves, height] : b) {
    std::vector<ImageId> mapped;
    for (const auto l : leaves) mapped.push_back(perm[l]);
    std::sort(mapped.begin(), mapped.end());
    const auto it = a.find(mapped);
    REQUIRE(it != a.end());
    CHECK(it->second == doctest::Approx(height).epsilon(1e-12));
  }
}

TEST_CASE("cut_k on a balanced four-leaf tree") {
  const auto tree = balanced_four();
  CHECK(cut_k(tree, 1).node_ids == std::vector<NodeId>{6});
  const auto three = cut_k(tree, 3).node_ids;
  REQUIRE(three.size() == 3);
  CHECK(tree.node(three[0]).depth + tree.node(three[1]).depth + tree.node(three[2]).depth == 1 + 2 + 2);
  CHECK(three == std::vector<NodeId>{0, 1, 5});
  CHECK(cut_k(tree, 4).node_ids == std::vector<NodeId>{0, 1, 2, 3});
  CHECK(code_of([&] { cut_k(tree, 0); }) == ErrorCode::Range);
  CHECK(code_of([&] { cut_k(tree, 5); }) == ErrorCode::Range);
}

TEST_CASE("cuts partition the leaves and refine one split at a time") {
  std::mt19937_64 rng(5);
  for (const std::size_t n : {1, 2, 3, 17, 64}) {
    const auto tree = oracle::random_tree(rng, n);
    std::set<NodeId> previous;
    for (std::size_t k = 1; k <= n; ++k) {
      const auto cut = cut_k(tree, k);
      REQUIRE(cut.node_ids.size() == k);
      std::vector<ImageId> covered;
      for (const auto id : cut.node_ids) {
        const auto leaves = tree.leaves_under(id);
        covered.insert(covered.end(), leaves.begin(), leaves.end());
      }
      std::sort(covered.begin(), covered.end());
      CHECK(covered.size() == n);
      CHECK(std::adjacent_find(covered.begin(), covered.end()) == covered.end());

      const std::set<NodeId> current(cut.node_ids.begin(), cut.node_ids.end());
      if (k > 1) {
        std::vector<NodeId> removed, added;
        std::set_difference(previous.begin(), previous.end(), current.begin(), current.end(),
                            std::back_inserter(removed));
        std::set_difference(current.begin(), current.end(), previous.begin(), previous.end(),
                            std::back_inserter(added));
        REQUIRE(removed.size() == 1);
        REQUIRE(added.size() == 2);
        const auto& split = tree.node(removed[0]);
        CHECK(std::set<NodeId>(added.begin(), added.end()) == std::set<NodeId>{split.left, split.right});
      }
      previous = current;
    }
  }
}

TEST_CASE("subtree cut stays inside the subtree") {
  const auto tree = balanced_four();
  CHECK(subtree_cut(tree, 5, 2).node_ids == std::vector<NodeId>{2, 3});
  CHECK(subtree_cut(tree, 5, 1).node_ids == std::vector<NodeId>{5});
  CHECK(code_of([&] { subtree_cut(tree, 5, 3); }) == ErrorCode::Range);
  CHECK(code_of([&] { subtree_cut(tree, 99, 1); }) == ErrorCode::UnknownNode);
}

TEST_CASE("lca hops are counted from the first leaf") {
  // ((a, b), c) with a=0, b=1, c=2.
  const auto tree = Dendrogram::from_merges(3, {{0, 1, 1.0}, {3, 2, 2.0}});
  CHECK(lca_hops(tree, 0, 1) == 1);
  CHECK(lca_hops(tree, 0, 2) == 2);
  CHECK(lca_hops(tree, 2, 0) == 1);
  CHECK(lca_hops(tree, 1, 1) == 0);
  CHECK(code_of([&] { lca_hops(tree, 0, 3); }) == ErrorCode::UnknownLeaf);
}

TEST_CASE("from_merges validates its input") {
  CHECK(code_of([] { Dendrogram::from_merges(3, {{0, 1, 1.0}}); }) == ErrorCode::Validation);
  CHECK(code_of([] { Dendrogram::from_merges(3, {{0, 0, 1.0}, {3, 2, 2.0}}); }) == ErrorCode::Validation);
  CHECK(code_of([] { Dendrogram::from_merges(3, {{0, 1, 1.0}, {0, 2, 2.0}}); }) == ErrorCode::Validation);
  CHECK(code_of([] { Dendrogram::from_merges(3, {{0, 1, 1.0}, {3, 7, 2.0}}); }) == ErrorCode::Validation);
}

TEST_CASE("dendrogram json round trip") {
  std::mt19937_64 rng(9);
  const auto tree = ward_dendrogram(oracle::random_points(rng, 25, 5));
  const auto text = dendrogram_to_json(tree);
  const auto back = dendrogram_from_json(text);
  CHECK(dendrogram_to_json(back) == text);
  CHECK(oracle::clusters_of(back) == oracle::clusters_of(tree));
  CHECK(code_of([] { dendrogram_from_json("{}"); }) == ErrorCode::Parse);
  CHECK(code_of([] { dendrogram_from_json("[1,"); }) == ErrorCode::Parse);
}
