#include "dendromap/treemap.hpp"

#include <algorithm>
#include <unordered_set>

#include <json.hpp>

#include "dendromap/error.hpp"

namespace dendromap {

Rect Rect::inset(std::int64_t amount) const {
  return {x + amount, y + amount, std::max<std::int64_t>(0, w - 2 * amount),
          std::max<std::int64_t>(0, h - 2 * amount)};
}

bool Rect::contains(const Rect& other) const {
  return other.x >= x && other.y >= y && other.x + other.w <= x + w && other.y + other.h <= y + h;
}

bool Rect::overlaps(const Rect& other) const {
  return std::max(x, other.x) < std::min(x + w, other.x + other.w) &&
         std::max(y, other.y) < std::min(y + h, other.y + other.h);
}

void LayoutConfig::validate() const {
  if (viewport_w <= 0 || viewport_h <= 0) fail(ErrorCode::InvalidArgument, "viewport must be positive");
  if (image_w <= 0 || image_h <= 0) fail(ErrorCode::InvalidArgument, "image size must be positive");
  if (padding < 0 || header_h < 0)
    fail(ErrorCode::InvalidArgument, "padding and header height must be non-negative");
  if (image_w > viewport_w || image_h > viewport_h)
    fail(ErrorCode::InvalidArgument, "image size exceeds the viewport");
}

Partition partition(const Rect& parent, std::size_t n_left, std::size_t n_right,
                    const LayoutConfig& config) {
  const std::size_t total = n_left + n_right;
  if (total == 0) fail(ErrorCode::InvalidArgument, "partition of an empty cluster");
  if (parent.w < config.image_w || parent.h < config.image_h)
    fail(ErrorCode::DegenerateSpace, "a " + std::to_string(parent.w) + "x" + std::to_string(parent.h) +
                                         " rect cannot hold one image cell");

  Partition result;
  result.axis = parent.w >= parent.h ? SplitAxis::Dice : SplitAxis::Slice;
  result.ratio = static_cast<double>(n_left) / static_cast<double>(total);
  const bool dice = result.axis == SplitAxis::Dice;
  const std::int64_t axis_length = dice ? parent.w : parent.h;
  const std::int64_t cell = dice ? config.image_w : config.image_h;
  result.fit = axis_length / cell;

  std::int64_t left_length = 0;
  if (n_right == 0) {
    result.left_cells = result.fit;
    left_length = axis_length;
  } else if (n_left == 0) {
    result.left_cells = 0;
  } else {
    if (result.fit < 2)
      fail(ErrorCode::DegenerateSpace, "rect of " + std::to_string(axis_length) +
                                           " px cannot give both children an image cell");
    // Integer form of floor(fit * ratio).
    const auto share = static_cast<std::int64_t>(static_cast<std::size_t>(result.fit) * n_left / total);
    result.left_cells = std::clamp<std::int64_t>(share, 1, result.fit - 1);
    left_length = result.left_cells * cell;
  }

  if (dice) {
    result.left_outer = {parent.x, parent.y, left_length, parent.h};
    result.right_outer = {parent.x + left_length, parent.y, parent.w - left_length, parent.h};
  } else {
    result.left_outer = {parent.x, parent.y, parent.w, left_length};
    result.right_outer = {parent.x, parent.y + left_length, parent.w, parent.h - left_length};
  }
  result.left = n_left == 0 ? Rect{result.left_outer.x, result.left_outer.y, 0, 0}
                            : result.left_outer.inset(config.padding);
  result.right = n_right == 0 ? Rect{result.right_outer.x, result.right_outer.y, 0, 0}
                              : result.right_outer.inset(config.padding);
  return result;
}

std::size_t capacity(const Rect& rect, const LayoutConfig& config) {
  const std::int64_t cols = rect.w / config.image_w;
  const std::int64_t rows = (rect.h - config.header_h) / config.image_h;
  if (cols <= 0 || rows <= 0 || rect.h < config.header_h) return 0;
  return static_cast<std::size_t>(cols * rows);
}

std::vector<ImageId> sample_images(const std::vector<ImageId>& ordered_ids, std::size_t capacity) {
  const std::size_t length = ordered_ids.size();
  if (capacity >= length) return ordered_ids;
  std::vector<ImageId> sample;
  sample.reserve(capacity);
  for (std::size_t i = 0; i < capacity; ++i) sample.push_back(ordered_ids[i * length / capacity]);
  return sample;
}

namespace {

class LayoutBuilder {
 public:
  LayoutBuilder(const Dendrogram& tree, const std::unordered_set<NodeId>& cut,
                const LayoutConfig& config, const DatasetManifest* labels)
      : tree_(tree), cut_(cut), config_(config), labels_(labels) {}

  LayoutNode build(NodeId id, const Rect& rect) const {
    const auto& node = tree_.nodes()[id];
    LayoutNode out;
    out.node_id = id;
    out.rect = rect;
    out.depth_remaining = node.height_below;

    if (cut_.contains(id)) {
      fill_cluster(out);
      return out;
    }
    const auto& left = tree_.nodes()[node.left];
    const auto& right = tree_.nodes()[node.right];
    const auto split = partition(rect, left.leaf_count, right.leaf_count, config_);
    out.children.push_back(build(node.left, split.left));
    out.children.push_back(build(node.right, split.right));
    return out;
  }

 private:
  void fill_cluster(LayoutNode& out) const {
    out.is_cut_leaf = true;
    const std::size_t slots = capacity(out.rect, config_);
    if (slots == 0)
      fail(ErrorCode::DegenerateSpace, "cluster " + std::to_string(out.node_id) + " gets a " +
                                           std::to_string(out.rect.w) + "x" + std::to_string(out.rect.h) +
                                           " rect, too small for one image");
    const auto members = tree_.leaves_under(out.node_id);
    const bool predictions = labels_ != nullptr && labels_->has_predictions;

    ClusterHeader header;
    header.image_count = members.size();
    if (predictions) {
      std::size_t correct = 0;
      for (const auto id : members) correct += labels_->items[id].misclassified() ? 0 : 1;
      header.accuracy = static_cast<double>(correct) / static_cast<double>(members.size());
    }
    out.header = header;

    const auto cols = static_cast<std::size_t>(out.rect.w / config_.image_w);
    const auto sample = sample_images(members, slots);
    out.placements.reserve(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
      ImagePlacement p;
      p.image_id = sample[i];
      p.col = i % cols;
      p.row = i / cols;
      p.x = out.rect.x + static_cast<std::int64_t>(p.col) * config_.image_w;
      p.y = out.rect.y + config_.header_h + static_cast<std::int64_t>(p.row) * config_.image_h;
      if (predictions) p.misclassified = labels_->items[p.image_id].misclassified();
      out.placements.push_back(p);
    }
  }

  const Dendrogram& tree_;
  const std::unordered_set<NodeId>& cut_;
  const LayoutConfig& config_;
  const DatasetManifest* labels_;
};

nlohmann::json rect_json(const Rect& r) {
  return {{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}};
}

nlohmann::json node_json(const LayoutNode& node) {
  nlohmann::json out = {{"node_id", node.node_id},
                        {"rect", rect_json(node.rect)},
                        {"depth_remaining", node.depth_remaining},
                        {"is_cut_leaf", node.is_cut_leaf}};
  if (node.header) {
    nlohmann::json header = {{"image_count", node.header->image_count}};
    header["accuracy"] = node.header->accuracy ? nlohmann::json(*node.header->accuracy) : nlohmann::json();
    out["header"] = std::move(header);
    nlohmann::json placements = nlohmann::json::array();
    for (const auto& p : node.placements) {
      nlohmann::json entry = {{"image_id", p.image_id},
                              {"cell", {p.col, p.row}},
                              {"x", p.x},
                              {"y", p.y}};
      entry["misclassified"] = p.misclassified ? nlohmann::json(*p.misclassified) : nlohmann::json();
      placements.push_back(std::move(entry));
    }
    out["placements"] = std::move(placements);
  }
  nlohmann::json children = nlohmann::json::array();
  for (const auto& child : node.children) children.push_back(node_json(child));
  out["children"] = std::move(children);
  return out;
}

}  // namespace

LayoutTree layout(const Dendrogram& tree, const ClusterCut& cut, const LayoutConfig& config,
                  std::optional<NodeId> zoom_root, const DatasetManifest* labels) {
  config.validate();
  if (tree.node_count() == 0) fail(ErrorCode::EmptyInput, "empty dendrogram");
  const NodeId top = zoom_root.value_or(tree.root());
  const auto& top_node = tree.node(top);
  if (labels != nullptr && labels->size() != tree.leaf_count())
    fail(ErrorCode::Validation, "label count does not match the dendrogram");

  std::unordered_set<NodeId> members;
  std::size_t covered = 0;
  for (const NodeId id : cut.node_ids) {
    const auto& node = tree.node(id);
    if (!tree.contains(top, id))
      fail(ErrorCode::Validation, "cut node " + std::to_string(id) + " is outside node " + std::to_string(top));
    if (!members.insert(id).second) fail(ErrorCode::Validation, "cut repeats node " + std::to_string(id));
    covered += node.leaf_count;
  }
  if (covered != top_node.leaf_count || members.empty())
    fail(ErrorCode::Validation, "cut does not partition the leaves of node " + std::to_string(top));
  // Leaf ranges must tile the zoom root's range without overlap.
  std::vector<NodeId> by_position(cut.node_ids);
  std::sort(by_position.begin(), by_position.end(), [&](NodeId a, NodeId b) {
    return tree.nodes()[a].first_leaf_pos < tree.nodes()[b].first_leaf_pos;
  });
  for (std::size_t i = 1; i < by_position.size(); ++i) {
    const auto& prev = tree.nodes()[by_position[i - 1]];
    if (prev.first_leaf_pos + prev.leaf_count > tree.nodes()[by_position[i]].first_leaf_pos)
      fail(ErrorCode::Validation, "cut nodes " + std::to_string(prev.id) + " and " +
                                      std::to_string(by_position[i]) + " overlap");
  }

  LayoutTree out;
  out.config = config;
  out.zoom_root = top;
  out.k = cut.node_ids.size();
  const LayoutBuilder builder(tree, members, config, labels);
  out.root = builder.build(top, Rect{0, 0, config.viewport_w, config.viewport_h});
  return out;
}

LayoutTree zoom(const Dendrogram& tree, NodeId node, std::size_t k, const LayoutConfig& config,
                const DatasetManifest* labels) {
  const auto leaves = tree.node(node).leaf_count;
  return layout(tree, subtree_cut(tree, node, std::min(k, leaves)), config, node, labels);
}

std::string layout_to_json(const LayoutTree& layout) {
  const auto& c = layout.config;
  nlohmann::json doc = {
      {"schema_version", 1},
      {"zoom_root", layout.zoom_root},
      {"k", layout.k},
      {"config",
       {{"viewport_w", c.viewport_w},
        {"viewport_h", c.viewport_h},
        {"image_w", c.image_w},
        {"image_h", c.image_h},
        {"padding", c.padding},
        {"header_h", c.header_h}}},
      {"root", node_json(layout.root)}};
  return doc.dump() + "\n";
}

}  // namespace dendromap
