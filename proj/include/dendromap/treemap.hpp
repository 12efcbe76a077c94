#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dendromap/hclust.hpp"
#include "dendromap/ingest.hpp"

namespace dendromap {

struct Rect {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t w = 0;
  std::int64_t h = 0;

  Rect inset(std::int64_t amount) const;
  bool contains(const Rect& other) const;
  bool overlaps(const Rect& other) const;
  std::int64_t area() const { return w * h; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct LayoutConfig {
  std::int64_t viewport_w = 1280;
  std::int64_t viewport_h = 800;
  std::int64_t image_w = 48;
  std::int64_t image_h = 48;
  std::int64_t padding = 10;
  std::int64_t header_h = 20;

  // Throws InvalidArgument.
  void validate() const;
};

enum class SplitAxis { Dice, Slice };

// One slice-dice step. `left_outer`/`right_outer` are the partitions before
// padding; `left`/`right` are what the children render into.
struct Partition {
  SplitAxis axis = SplitAxis::Dice;
  double ratio = 0.0;
  std::int64_t fit = 0;         // image cells across the split axis
  std::int64_t left_cells = 0;  // cells given to the left/top child
  Rect left_outer;
  Rect right_outer;
  Rect left;
  Rect right;
};

/// Dice (split along x) when the parent is at least as wide as tall, slice
/// otherwise. The left/top share is floor(fit * ratio) cells, clamped to
/// [1, fit-1] when both sides hold images. Throws DegenerateSpace when the
/// parent cannot hold one image cell, or cannot hold one cell per side.
Partition partition(const Rect& parent, std::size_t n_left, std::size_t n_right,
                    const LayoutConfig& config);

/// Grid cells available below the header band; zero when nothing fits.
std::size_t capacity(const Rect& rect, const LayoutConfig& config);

/// Evenly strided, order-preserving subsample of at most `capacity` ids.
std::vector<ImageId> sample_images(const std::vector<ImageId>& ordered_ids, std::size_t capacity);

struct ClusterHeader {
  std::size_t image_count = 0;
  std::optional<double> accuracy;
};

struct ImagePlacement {
  ImageId image_id = 0;
  std::size_t col = 0;
  std::size_t row = 0;
  std::int64_t x = 0;  // pixel origin, derived from the cell
  std::int64_t y = 0;
  std::optional<bool> misclassified;
};

struct LayoutNode {
  NodeId node_id = 0;
  Rect rect;
  std::size_t depth_remaining = 0;
  bool is_cut_leaf = false;
  std::optional<ClusterHeader> header;
  std::vector<ImagePlacement> placements;
  std::vector<LayoutNode> children;
};

struct LayoutTree {
  LayoutConfig config;
  NodeId zoom_root = 0;
  std::size_t k = 0;
  LayoutNode root;
};

/// Lays out `cut` inside the viewport, starting from `zoom_root` (the tree
/// root when absent). `labels` supplies header accuracy and misclassified
/// flags when it carries predictions; it may be null.
LayoutTree layout(const Dendrogram& tree, const ClusterCut& cut, const LayoutConfig& config,
                  std::optional<NodeId> zoom_root = std::nullopt,
                  const DatasetManifest* labels = nullptr);

/// layout() of `node` with its breadth-first cut of min(k, leaf_count) clusters.
LayoutTree zoom(const Dendrogram& tree, NodeId node, std::size_t k, const LayoutConfig& config,
                const DatasetManifest* labels = nullptr);

std::string layout_to_json(const LayoutTree& layout);

}  // namespace dendromap
