#include "dendromap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>
#include <utility>

#include <json.hpp>

#include "dendromap/error.hpp"

namespace dendromap {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::json optional_json(const std::optional<double>& value) {
  return value ? nlohmann::json(*value) : nlohmann::json();
}

class EmbeddingOracle final : public DistanceOracle {
 public:
  EmbeddingOracle(const EmbeddingMatrix& embeddings, std::string name)
      : embeddings_(embeddings), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  std::size_t size() const override { return embeddings_.rows(); }
  void row(ImageId i, std::span<RankKey> out) const override {
    const auto a = embeddings_.row(i);
    for (std::size_t j = 0; j < out.size(); ++j) {
      const auto b = embeddings_.row(j);
      double sum = 0.0;
      for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        sum += diff * diff;
      }
      out[j] = {std::sqrt(sum), 0.0};
    }
  }

 private:
  const EmbeddingMatrix& embeddings_;
  std::string name_;
};

class PlaneOracle final : public DistanceOracle {
 public:
  PlaneOracle(std::vector<Point2> points, std::string name)
      : points_(std::move(points)), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  std::size_t size() const override { return points_.size(); }
  void row(ImageId i, std::span<RankKey> out) const override {
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] = {std::hypot(points_[i].x - points_[j].x, points_[i].y - points_[j].y), 0.0};
  }

 private:
  std::vector<Point2> points_;
  std::string name_;
};

class DendrogramOracle final : public DistanceOracle {
 public:
  explicit DendrogramOracle(const Dendrogram& tree) : tree_(tree) {}
  std::string name() const override { return "dendromap"; }
  std::size_t size() const override { return tree_.leaf_count(); }

  // Walks up from leaf i; every leaf under the sibling reached at hop h has
  // its LCA with i exactly h edges up.
  void row(ImageId i, std::span<RankKey> out) const override {
    const auto& nodes = tree_.nodes();
    const auto& order = tree_.leaf_order();
    const auto pos_i = static_cast<double>(tree_.leaf_position(i));
    out[i] = {0.0, 0.0};
    NodeId child = i;
    double hops = 0.0;
    while (nodes[child].parent != kNoNode) {
      const auto& parent = nodes[nodes[child].parent];
      hops += 1.0;
      const auto& sibling = nodes[parent.left == child ? parent.right : parent.left];
      for (std::size_t p = sibling.first_leaf_pos; p < sibling.first_leaf_pos + sibling.leaf_count; ++p)
        out[order[p]] = {hops, std::abs(static_cast<double>(p) - pos_i)};
      child = parent.id;
    }
  }

 private:
  const Dendrogram& tree_;
};

class PermutationOracle final : public DistanceOracle {
 public:
  PermutationOracle(std::size_t size, std::uint64_t seed) : position_(size) {
    std::iota(position_.begin(), position_.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(position_.begin(), position_.end(), rng);
  }
  std::string name() const override { return "random_permutation"; }
  std::size_t size() const override { return position_.size(); }
  void row(ImageId i, std::span<RankKey> out) const override {
    const auto pi = static_cast<double>(position_[i]);
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] = {std::abs(static_cast<double>(position_[j]) - pi), 0.0};
  }

 private:
  std::vector<std::size_t> position_;
};

bool ranks_before(const std::vector<RankKey>& keys, ImageId a, ImageId b) {
  const auto& x = keys[a];
  const auto& y = keys[b];
  if (x.primary != y.primary) return x.primary < y.primary;
  if (x.secondary != y.secondary) return x.secondary < y.secondary;
  return a < b;
}

// Fills `ids` with the n best neighbours of i, reusing `keys` as scratch.
void ranked_neighbors(const DistanceOracle& oracle, ImageId i, std::size_t n,
                      std::vector<RankKey>& keys, std::vector<ImageId>& ids) {
  const std::size_t size = oracle.size();
  keys.resize(size);
  oracle.row(i, keys);
  ids.clear();
  for (std::size_t j = 0; j < size; ++j)
    if (j != i) ids.push_back(j);
  const auto cmp = [&](ImageId a, ImageId b) { return ranks_before(keys, a, b); };
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(), cmp);
  ids.resize(n);
}

}  // namespace

std::vector<ClassStats> class_table(const DatasetManifest& manifest, std::span<const ImageId> subset) {
  if (!manifest.has_predictions) fail(ErrorCode::NoPredictions, "dataset has no predicted classes");
  if (subset.empty()) fail(ErrorCode::EmptySubset, "class table over an empty subset");

  const std::size_t classes = manifest.classes.size();
  std::vector<std::size_t> truth(classes, 0), predicted(classes, 0), hits(classes, 0);
  for (const ImageId id : subset) {
    if (id >= manifest.size()) fail(ErrorCode::UnknownLeaf, "unknown image id " + std::to_string(id));
    const auto& item = manifest.items[id];
    ++truth[item.true_class];
    ++predicted[*item.predicted_class];
    if (*item.predicted_class == item.true_class) ++hits[item.true_class];
  }

  std::vector<ClassStats> rows(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    auto& row = rows[c];
    row.class_id = static_cast<ClassId>(c);
    row.true_count = truth[c];
    row.predicted_count = predicted[c];
    if (truth[c] > 0) {
      row.accuracy = ratio(hits[c], truth[c]);
      row.false_negative_rate = ratio(truth[c] - hits[c], truth[c]);
    }
    if (predicted[c] > 0) row.false_positive_rate = ratio(predicted[c] - hits[c], predicted[c]);
  }
  return rows;
}

std::string class_table_to_json(const DatasetManifest& manifest, const std::vector<ClassStats>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& row : rows) {
    out.push_back({{"class_id", row.class_id},
                   {"class_name", manifest.classes.at(row.class_id)},
                   {"true_count", row.true_count},
                   {"predicted_count", row.predicted_count},
                   {"accuracy", optional_json(row.accuracy)},
                   {"false_negative_rate", optional_json(row.false_negative_rate)},
                   {"false_positive_rate", optional_json(row.false_positive_rate)}});
  }
  return out.dump() + "\n";
}

RankKey DistanceOracle::operator()(ImageId i, ImageId j) const {
  std::vector<RankKey> keys(size());
  row(i, keys);
  return keys.at(j);
}

std::unique_ptr<DistanceOracle> embedding_distance_oracle(const EmbeddingMatrix& embeddings,
                                                          std::string name) {
  return std::make_unique<EmbeddingOracle>(embeddings, std::move(name));
}

std::unique_ptr<DistanceOracle> projection_distance_oracle(const Projection2D& projection,
                                                           std::string name) {
  return std::make_unique<PlaneOracle>(projection.points, std::move(name));
}

std::unique_ptr<DistanceOracle> dendromap_distance_oracle(const Dendrogram& tree) {
  return std::make_unique<DendrogramOracle>(tree);
}

std::unique_ptr<DistanceOracle> grid_distance_oracle(const GridAssignment& grid, std::size_t image_count) {
  const auto where = grid.cell_of(image_count);
  std::vector<Point2> centers(image_count);
  for (std::size_t i = 0; i < image_count; ++i) {
    if (!where[i]) fail(ErrorCode::Validation, "image " + std::to_string(i) + " is not on the grid");
    const auto col = *where[i] % grid.grid_cols;
    const auto row = *where[i] / grid.grid_cols;
    centers[i] = {(static_cast<double>(col) + 0.5) * static_cast<double>(grid.image_w),
                  (static_cast<double>(row) + 0.5) * static_cast<double>(grid.image_h)};
  }
  return std::make_unique<PlaneOracle>(std::move(centers), "grid");
}

std::unique_ptr<DistanceOracle> random_permutation_oracle(std::size_t size, std::uint64_t seed) {
  return std::make_unique<PermutationOracle>(size, seed);
}

std::vector<ImageId> similar_images(const EmbeddingMatrix& embeddings, ImageId query, std::size_t n) {
  const std::size_t size = embeddings.rows();
  if (query >= size) fail(ErrorCode::UnknownLeaf, "unknown image id " + std::to_string(query));
  if (n < 1 || n >= size)
    fail(ErrorCode::Range, "n=" + std::to_string(n) + " outside [1, " + std::to_string(size - 1) + "]");
  return top_neighbors(EmbeddingOracle(embeddings, "high_dimensional"), query, n);
}

std::vector<ImageId> top_neighbors(const DistanceOracle& oracle, ImageId i, std::size_t n) {
  if (i >= oracle.size()) fail(ErrorCode::UnknownLeaf, "unknown image id " + std::to_string(i));
  if (n >= oracle.size()) fail(ErrorCode::Range, "asked for more neighbours than exist");
  std::vector<RankKey> keys;
  std::vector<ImageId> ids;
  ranked_neighbors(oracle, i, n, keys, ids);
  return ids;
}

const OverlapCurve* NeighborReport::curve(std::string_view method) const {
  for (const auto& c : curves)
    if (c.method == method) return &c;
  return nullptr;
}

std::vector<std::size_t> default_k_values(std::size_t n) {
  std::vector<std::size_t> ks;
  for (const std::size_t k : {1, 5, 10, 25, 50, 100, 200, 300})
    if (k + 1 <= n) ks.push_back(k);
  return ks;
}

NeighborReport knn_preservation(const DistanceOracle& reference,
                                std::span<const DistanceOracle* const> methods,
                                std::vector<std::size_t> k_values) {
  const std::size_t n = reference.size();
  for (const auto* method : methods)
    if (method->size() != n) fail(ErrorCode::Shape, "oracle '" + method->name() + "' covers a different point count");
  std::sort(k_values.begin(), k_values.end());
  k_values.erase(std::unique(k_values.begin(), k_values.end()), k_values.end());
  for (const auto k : k_values)
    if (k < 1 || k + 1 > n) fail(ErrorCode::Range, "k=" + std::to_string(k) + " outside [1, N-1]");

  NeighborReport report;
  report.points = n;
  report.k_values = k_values;
  if (k_values.empty() || methods.empty()) {
    for (const auto* method : methods) report.curves.push_back({method->name(), {}});
    return report;
  }
  const std::size_t k_max = k_values.back();

  // Integer sums per (method, k); each worker owns one slice.
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), n / 64 + 1));
  std::vector<std::vector<std::uint64_t>> totals(workers,
                                                 std::vector<std::uint64_t>(methods.size() * k_values.size(), 0));
  auto work = [&](std::size_t worker) {
    std::vector<RankKey> keys;
    std::vector<ImageId> ref_ids, method_ids;
    std::vector<std::uint8_t> seen(n, 0);  // bit 0: in reference list, bit 1: in method list
    auto& sums = totals[worker];
    for (std::size_t i = worker; i < n; i += workers) {
      ranked_neighbors(reference, i, k_max, keys, ref_ids);
      for (std::size_t m = 0; m < methods.size(); ++m) {
        ranked_neighbors(*methods[m], i, k_max, keys, method_ids);
        std::uint64_t common = 0;
        std::size_t next_k = 0;
        for (std::size_t depth = 0; depth < k_max; ++depth) {
          const ImageId a = ref_ids[depth];
          const ImageId b = method_ids[depth];
          if (std::exchange(seen[a], seen[a] | 1) == 2) ++common;
          if (std::exchange(seen[b], seen[b] | 2) == 1) ++common;
          if (depth + 1 == k_values[next_k]) sums[m * k_values.size() + next_k++] += common;
        }
        for (std::size_t depth = 0; depth < k_max; ++depth) {
          seen[ref_ids[depth]] = 0;
          seen[method_ids[depth]] = 0;
        }
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }

  for (std::size_t m = 0; m < methods.size(); ++m) {
    OverlapCurve curve{methods[m]->name(), {}};
    for (std::size_t kk = 0; kk < k_values.size(); ++kk) {
      std::uint64_t sum = 0;
      for (const auto& t : totals) sum += t[m * k_values.size() + kk];
      curve.mean_overlap.push_back(static_cast<double>(sum) / static_cast<double>(n));
    }
    report.curves.push_back(std::move(curve));
  }
  return report;
}

NeighborReport knn_preservation(const EmbeddingMatrix& embeddings,
                                std::span<const DistanceOracle* const> methods,
                                std::vector<std::size_t> k_values) {
  const EmbeddingOracle reference(embeddings, "high_dimensional");
  return knn_preservation(reference, methods, std::move(k_values));
}

std::string report_to_csv(const NeighborReport& report) {
  std::string out = "method,k,mean_overlap\n";
  for (const auto& curve : report.curves) {
    for (std::size_t i = 0; i < report.k_values.size(); ++i) {
      out += curve.method + "," + std::to_string(report.k_values[i]) + "," +
             nlohmann::json(curve.mean_overlap[i]).dump() + "\n";
    }
  }
  return out;
}

std::string report_to_json(const NeighborReport& report) {
  nlohmann::json series = nlohmann::json::array();
  for (const auto& curve : report.curves)
    series.push_back({{"method", curve.method}, {"mean_overlap", curve.mean_overlap}});
  const nlohmann::json doc = {
      {"schema_version", 1},
      {"points", report.points},
      {"k_values", report.k_values},
      {"series", std::move(series)},
      {"ranking",
       "top-k lists exclude the query and sort by (distance, tie key, id); the dendromap "
       "distance counts parent edges from the query leaf to the lowest common ancestor "
       "(directional) and breaks hop ties by distance in leaf order"}};
  return doc.dump(2) + "\n";
}

}  // namespace dendromap
