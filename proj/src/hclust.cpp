#include "dendromap/hclust.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <tuple>
#include <unordered_set>

#include <json.hpp>

#include "dendromap/error.hpp"

namespace dendromap {

namespace {

constexpr int kDendrogramSchemaVersion = 1;

// Upper-triangular storage of a symmetric N x N matrix without the diagonal.
class CondensedMatrix {
 public:
  explicit CondensedMatrix(std::size_t n) : n_(n), values_(n < 2 ? 0 : n * (n - 1) / 2) {}

  double& operator()(std::size_t i, std::size_t j) { return values_[index(i, j)]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[index(i, j)]; }

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return i * n_ - i * (i + 1) / 2 + (j - i - 1);
  }

  std::size_t n_;
  std::vector<double> values_;
};

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    sum += diff * diff;
  }
  return sum;
}

void append_number(std::string& out, double value) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  out.append(buffer, ptr);
}

void append_number(std::string& out, std::size_t value) {
  char buffer[24];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  out.append(buffer, ptr);
}

}  // namespace

const DendrogramNode& Dendrogram::node(NodeId id) const {
  if (id >= nodes_.size()) fail(ErrorCode::UnknownNode, "unknown dendrogram node " + std::to_string(id));
  return nodes_[id];
}

Dendrogram Dendrogram::from_merges(std::size_t leaves, const std::vector<Merge>& merges) {
  if (leaves == 0) fail(ErrorCode::EmptyInput, "dendrogram needs at least one leaf");
  if (merges.size() != leaves - 1)
    fail(ErrorCode::Validation, "expected " + std::to_string(leaves - 1) + " merges, got " +
                                    std::to_string(merges.size()));

  // Renumber merges so that ids grow with height while children still precede
  // parents: Kahn's algorithm keyed by (height, original position).
  const std::size_t total = 2 * leaves - 1;
  std::vector<std::size_t> pending(merges.size(), 2);
  std::vector<std::size_t> parent_of(total, kNoNode);
  for (std::size_t m = 0; m < merges.size(); ++m) {
    for (const NodeId child : {merges[m].a, merges[m].b}) {
      if (child >= leaves + m)
        fail(ErrorCode::Validation, "merge " + std::to_string(m) + " references node " +
                                        std::to_string(child) + " before it exists");
      if (parent_of[child] != kNoNode)
        fail(ErrorCode::Validation, "node " + std::to_string(child) + " merged twice");
      parent_of[child] = m;
    }
    if (merges[m].a == merges[m].b)
      fail(ErrorCode::Validation, "merge " + std::to_string(m) + " joins a node with itself");
    if (!(merges[m].height >= 0.0) || !std::isfinite(merges[m].height))
      fail(ErrorCode::Validation, "merge " + std::to_string(m) + " has an invalid height");
  }

  using Ready = std::pair<double, std::size_t>;
  std::priority_queue<Ready, std::vector<Ready>, std::greater<>> ready;
  auto release = [&](NodeId child) {
    const auto m = parent_of[child];
    if (m != kNoNode && --pending[m] == 0) ready.emplace(merges[m].height, m);
  };
  for (NodeId leaf = 0; leaf < leaves; ++leaf) release(leaf);

  std::vector<NodeId> final_id(total);
  for (NodeId leaf = 0; leaf < leaves; ++leaf) final_id[leaf] = leaf;

  Dendrogram tree;
  tree.leaves_ = leaves;
  tree.nodes_.resize(total);
  for (NodeId id = 0; id < total; ++id) tree.nodes_[id].id = id;

  NodeId next = leaves;
  while (!ready.empty()) {
    const auto m = ready.top().second;
    ready.pop();
    final_id[leaves + m] = next;
    auto& node = tree.nodes_[next];
    node.left = final_id[merges[m].a];
    node.right = final_id[merges[m].b];
    node.merge_height = merges[m].height;
    ++next;
    release(leaves + m);
  }
  if (next != total) fail(ErrorCode::Validation, "merges do not form a single tree");

  tree.finalize();
  return tree;
}

void Dendrogram::finalize() {
  const std::size_t total = nodes_.size();
  // Children always carry smaller ids than their parent, so ascending id order
  // is a bottom-up traversal.
  std::vector<std::size_t> min_leaf(total);
  for (NodeId id = 0; id < total; ++id) {
    auto& node = nodes_[id];
    node.parent = kNoNode;
    if (node.is_leaf()) {
      node.leaf_count = 1;
      node.height_below = 0;
      node.merge_height = 0.0;
      min_leaf[id] = id;
      continue;
    }
    if (min_leaf[node.right] < min_leaf[node.left]) std::swap(node.left, node.right);
    const auto& left = nodes_[node.left];
    const auto& right = nodes_[node.right];
    node.leaf_count = left.leaf_count + right.leaf_count;
    node.height_below = 1 + std::max(left.height_below, right.height_below);
    min_leaf[id] = min_leaf[node.left];
    nodes_[node.left].parent = id;
    nodes_[node.right].parent = id;
  }

  for (NodeId id = total; id-- > 0;) {
    auto& node = nodes_[id];
    node.depth = node.parent == kNoNode ? 0 : nodes_[node.parent].depth + 1;
  }

  leaf_order_.clear();
  leaf_order_.reserve(leaves_);
  std::vector<NodeId> stack{root()};
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    const auto& node = nodes_[id];
    if (node.is_leaf()) {
      leaf_order_.push_back(id);
    } else {
      stack.push_back(node.right);
      stack.push_back(node.left);
    }
  }

  leaf_pos_.assign(leaves_, 0);
  for (std::size_t pos = 0; pos < leaf_order_.size(); ++pos) leaf_pos_[leaf_order_[pos]] = pos;
  for (NodeId id = 0; id < total; ++id) {
    auto& node = nodes_[id];
    node.first_leaf_pos = node.is_leaf() ? leaf_pos_[id] : nodes_[node.left].first_leaf_pos;
  }
}

std::vector<ImageId> Dendrogram::leaves_under(NodeId id) const {
  const auto& n = node(id);
  const auto begin = leaf_order_.begin() + static_cast<std::ptrdiff_t>(n.first_leaf_pos);
  return {begin, begin + static_cast<std::ptrdiff_t>(n.leaf_count)};
}

bool Dendrogram::contains(NodeId ancestor, NodeId descendant) const {
  const auto& a = node(ancestor);
  const auto& d = node(descendant);
  return d.first_leaf_pos >= a.first_leaf_pos &&
         d.first_leaf_pos + d.leaf_count <= a.first_leaf_pos + a.leaf_count;
}

Dendrogram ward_dendrogram(const EmbeddingMatrix& embeddings) {
  const std::size_t n = embeddings.rows();
  if (n == 0) fail(ErrorCode::EmptyInput, "cannot cluster an empty embedding matrix");

  // Squared Ward distances; for singletons this is the squared Euclidean distance.
  CondensedMatrix dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row_i = embeddings.row(i);
    for (std::size_t j = i + 1; j < n; ++j) dist(i, j) = squared_distance(row_i, embeddings.row(j));
  }

  std::vector<std::size_t> size(n, 1);
  std::vector<NodeId> label(n);
  for (std::size_t i = 0; i < n; ++i) label[i] = i;
  std::vector<char> active(n, 1);
  std::vector<std::size_t> chain;
  chain.reserve(n);
  std::vector<Dendrogram::Merge> merges;
  merges.reserve(n - 1);
  std::size_t first_active = 0;

  for (std::size_t step = 0; step + 1 < n; ++step) {
    if (chain.empty()) {
      while (!active[first_active]) ++first_active;
      chain.push_back(first_active);
    }

    std::size_t a = 0;
    std::size_t b = 0;
    while (true) {
      a = chain.back();
      // The previous chain element wins ties, which keeps the chain acyclic;
      // otherwise the lowest slot index wins.
      std::size_t best = chain.size() >= 2 ? chain[chain.size() - 2] : n;
      double best_dist = best < n ? dist(a, best) : std::numeric_limits<double>::infinity();
      for (std::size_t c = first_active; c < n; ++c) {
        if (c == a || !active[c]) continue;
        const double d = dist(a, c);
        if (d < best_dist) {
          best_dist = d;
          best = c;
        }
      }
      if (chain.size() >= 2 && best == chain[chain.size() - 2]) {
        b = best;
        break;
      }
      chain.push_back(best);
    }
    chain.pop_back();
    chain.pop_back();

    const double d_ab = dist(a, b);
    merges.push_back({label[a], label[b], std::sqrt(d_ab)});

    const std::size_t keep = std::min(a, b);
    const std::size_t drop = std::max(a, b);
    const double n_a = static_cast<double>(size[a]);
    const double n_b = static_cast<double>(size[b]);
    for (std::size_t c = first_active; c < n; ++c) {
      if (!active[c] || c == a || c == b) continue;
      const double n_c = static_cast<double>(size[c]);
      dist(keep, c) =
          ((n_a + n_c) * dist(a, c) + (n_b + n_c) * dist(b, c) - n_c * d_ab) / (n_a + n_b + n_c);
    }
    active[drop] = 0;
    size[keep] += size[drop];
    label[keep] = n + step;
  }

  return Dendrogram::from_merges(n, merges);
}

namespace {

// Expansion order: shallowest first, then larger clusters, then smaller id.
struct ExpandFirst {
  const Dendrogram* tree;
  bool operator()(NodeId x, NodeId y) const {
    const auto& a = tree->nodes()[x];
    const auto& b = tree->nodes()[y];
    return std::make_tuple(a.depth, b.leaf_count, a.id) < std::make_tuple(b.depth, a.leaf_count, b.id);
  }
};

}  // namespace

ClusterCut subtree_cut(const Dendrogram& tree, NodeId root, std::size_t k) {
  const auto& start = tree.node(root);
  if (k < 1 || k > start.leaf_count)
    fail(ErrorCode::Range, "k=" + std::to_string(k) + " outside [1, " +
                               std::to_string(start.leaf_count) + "] for node " + std::to_string(root));

  std::set<NodeId, ExpandFirst> frontier(ExpandFirst{&tree});
  std::vector<NodeId> members{root};
  std::unordered_set<NodeId> expanded;
  if (!start.is_leaf()) frontier.insert(root);

  for (std::size_t count = 1; count < k; ++count) {
    const NodeId next = *frontier.begin();
    frontier.erase(frontier.begin());
    expanded.insert(next);
    for (const NodeId child : {tree.nodes()[next].left, tree.nodes()[next].right}) {
      members.push_back(child);
      if (!tree.nodes()[child].is_leaf()) frontier.insert(child);
    }
  }

  ClusterCut cut;
  cut.k = k;
  cut.node_ids.reserve(k);
  for (const NodeId id : members)
    if (!expanded.contains(id)) cut.node_ids.push_back(id);
  std::sort(cut.node_ids.begin(), cut.node_ids.end(), [&](NodeId x, NodeId y) {
    return tree.nodes()[x].first_leaf_pos < tree.nodes()[y].first_leaf_pos;
  });
  return cut;
}

ClusterCut cut_k(const Dendrogram& tree, std::size_t k) {
  if (tree.node_count() == 0) fail(ErrorCode::EmptyInput, "empty dendrogram");
  return subtree_cut(tree, tree.root(), k);
}

std::size_t lca_hops(const Dendrogram& tree, ImageId i, ImageId j) {
  const auto n = tree.leaf_count();
  if (i >= n || j >= n)
    fail(ErrorCode::UnknownLeaf, "unknown leaf " + std::to_string(i >= n ? i : j));
  if (i == j) return 0;
  const auto& nodes = tree.nodes();
  NodeId x = i;
  NodeId y = j;
  while (nodes[y].depth > nodes[x].depth) y = nodes[y].parent;
  while (nodes[x].depth > nodes[y].depth) x = nodes[x].parent;
  while (x != y) {
    x = nodes[x].parent;
    y = nodes[y].parent;
  }
  return nodes[i].depth - nodes[x].depth;
}

std::string dendrogram_to_json(const Dendrogram& tree) {
  std::string out = "{\"schema_version\":";
  append_number(out, static_cast<std::size_t>(kDendrogramSchemaVersion));
  out += ",\"leaf_count\":";
  append_number(out, tree.leaf_count());
  out += ",\"root\":";

  // Iterative pre-order walk; a second visit closes the children array.
  std::vector<std::pair<NodeId, bool>> stack{{tree.root(), false}};
  while (!stack.empty()) {
    auto [id, closing] = stack.back();
    stack.pop_back();
    const auto& node = tree.nodes()[id];
    if (closing) {
      out += "]}";
      continue;
    }
    if (!out.empty() && out.back() == '}') out += ',';
    out += "{\"id\":";
    append_number(out, node.id);
    out += ",\"leaf_count\":";
    append_number(out, node.leaf_count);
    out += ",\"merge_height\":";
    append_number(out, node.merge_height);
    if (node.is_leaf()) {
      out += ",\"image_id\":";
      append_number(out, static_cast<std::size_t>(node.id));
      out += '}';
    } else {
      out += ",\"children\":[";
      stack.push_back({id, true});
      stack.push_back({node.right, false});
      stack.push_back({node.left, false});
    }
  }
  out += "}\n";
  return out;
}

Dendrogram dendrogram_from_json(std::string_view json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Parse, std::string("dendrogram is not valid JSON: ") + e.what());
  }

  try {
    if (doc.at("schema_version").get<int>() != kDendrogramSchemaVersion)
      fail(ErrorCode::Parse, "unsupported dendrogram schema_version");
    const auto leaves = doc.at("leaf_count").get<std::size_t>();
    if (leaves == 0) fail(ErrorCode::Parse, "dendrogram has no leaves");

    std::vector<Dendrogram::Merge> merges(leaves - 1, {kNoNode, kNoNode, 0.0});
    std::vector<char> seen(2 * leaves - 1, 0);
    std::vector<const json*> stack{&doc.at("root")};
    while (!stack.empty()) {
      const json& node = *stack.back();
      stack.pop_back();
      const auto id = node.at("id").get<std::size_t>();
      if (id >= seen.size() || seen[id]) fail(ErrorCode::Parse, "bad or repeated node id " + std::to_string(id));
      seen[id] = 1;
      if (id < leaves) {
        if (node.at("image_id").get<std::size_t>() != id)
          fail(ErrorCode::Parse, "leaf " + std::to_string(id) + " carries a different image id");
        continue;
      }
      const auto& children = node.at("children");
      if (!children.is_array() || children.size() != 2)
        fail(ErrorCode::Parse, "internal node " + std::to_string(id) + " must have two children");
      auto& merge = merges[id - leaves];
      merge.a = children[0].at("id").get<std::size_t>();
      merge.b = children[1].at("id").get<std::size_t>();
      merge.height = node.at("merge_height").get<double>();
      stack.push_back(&children[0]);
      stack.push_back(&children[1]);
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
      fail(ErrorCode::Parse, "dendrogram is missing nodes");
    return Dendrogram::from_merges(leaves, merges);
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("malformed dendrogram: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Parse) throw;
    fail(ErrorCode::Parse, std::string("inconsistent dendrogram: ") + e.what());
  }
}

}  // namespace dendromap
