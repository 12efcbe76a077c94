#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dendromap/ingest.hpp"

namespace dendromap {

using NodeId = std::size_t;
inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

struct DendrogramNode {
  NodeId id = 0;
  NodeId left = kNoNode;   // absent for leaves
  NodeId right = kNoNode;  // absent for leaves
  NodeId parent = kNoNode; // absent for the root
  std::size_t leaf_count = 1;
  double merge_height = 0.0;
  std::size_t depth = 0;            // edges from the root
  std::size_t height_below = 0;     // longest path down to a leaf
  std::size_t first_leaf_pos = 0;   // leaves occupy leaf_order[first, first + leaf_count)

  bool is_leaf() const { return left == kNoNode; }
};

// Binary merge tree over N leaves. Leaves are nodes [0, N) and carry the image
// id of the same value; internal nodes are [N, 2N-1) in non-decreasing merge
// height, so the root is always 2N-2.
class Dendrogram {
 public:
  struct Merge {
    NodeId a;
    NodeId b;
    double height;
  };

  Dendrogram() = default;

  /// Builds a tree from N-1 merges given in any order where every merge only
  /// references leaves or earlier merges (node N + index). Children are
  /// reoriented so the subtree holding the smaller leaf index is on the left.
  static Dendrogram from_merges(std::size_t leaves, const std::vector<Merge>& merges);

  std::size_t leaf_count() const { return leaves_; }
  std::size_t node_count() const { return nodes_.size(); }
  NodeId root() const { return nodes_.size() - 1; }
  const DendrogramNode& node(NodeId id) const;
  const std::vector<DendrogramNode>& nodes() const { return nodes_; }
  const std::vector<ImageId>& leaf_order() const { return leaf_order_; }
  /// Position of a leaf within leaf_order.
  std::size_t leaf_position(ImageId leaf) const { return leaf_pos_.at(leaf); }
  /// Leaves under `id` in leaf order.
  std::vector<ImageId> leaves_under(NodeId id) const;
  bool contains(NodeId ancestor, NodeId descendant) const;

 private:
  void finalize();

  std::size_t leaves_ = 0;
  std::vector<DendrogramNode> nodes_;
  std::vector<ImageId> leaf_order_;
  std::vector<std::size_t> leaf_pos_;
};

struct ClusterCut {
  std::size_t k = 0;
  // Sorted left-to-right by position in leaf order.
  std::vector<NodeId> node_ids;
};

/// Exact Ward linkage (Euclidean) via nearest-neighbour chain. Heights are
/// Ward distances: a pair of singletons merges at their Euclidean distance.
Dendrogram ward_dendrogram(const EmbeddingMatrix& embeddings);

ClusterCut cut_k(const Dendrogram& tree, std::size_t k);
ClusterCut subtree_cut(const Dendrogram& tree, NodeId root, std::size_t k);

/// Parent edges from leaf i up to the lowest common ancestor of i and j.
/// Not symmetric: lca_hops(i, j) counts from i's side.
std::size_t lca_hops(const Dendrogram& tree, ImageId i, ImageId j);

/// Nested JSON: {"id","leaf_count","merge_height","children"} per internal
/// node, {"id","leaf_count","merge_height","image_id"} per leaf.
std::string dendrogram_to_json(const Dendrogram& tree);
Dendrogram dendrogram_from_json(std::string_view json_text);

}  // namespace dendromap
