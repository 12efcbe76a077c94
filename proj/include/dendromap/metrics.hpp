#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dendromap/gridify.hpp"
#include "dendromap/hclust.hpp"
#include "dendromap/ingest.hpp"

namespace dendromap {

struct ClassStats {
  ClassId class_id = 0;
  std::size_t true_count = 0;
  std::size_t predicted_count = 0;
  std::optional<double> accuracy;             // absent when true_count == 0
  std::optional<double> false_negative_rate;  // absent when true_count == 0
  std::optional<double> false_positive_rate;  // absent when predicted_count == 0
};

/// One row per class in the manifest, counted over `subset` only.
std::vector<ClassStats> class_table(const DatasetManifest& manifest, std::span<const ImageId> subset);
std::string class_table_to_json(const DatasetManifest& manifest, const std::vector<ClassStats>& rows);

/// The n nearest images to `query` in embedding space, excluding the query
/// itself. Ties go to the smaller id.
std::vector<ImageId> similar_images(const EmbeddingMatrix& embeddings, ImageId query, std::size_t n);

// Neighbour lists sort by (primary, secondary, id) ascending.
struct RankKey {
  double primary = 0.0;
  double secondary = 0.0;
};

class DistanceOracle {
 public:
  virtual ~DistanceOracle() = default;
  virtual std::string name() const = 0;
  virtual std::size_t size() const = 0;
  /// Fills out[j] with the ranking key of j as seen from i; out.size() == size().
  virtual void row(ImageId i, std::span<RankKey> out) const = 0;

  RankKey operator()(ImageId i, ImageId j) const;
};

/// Euclidean distance between embedding rows.
std::unique_ptr<DistanceOracle> embedding_distance_oracle(const EmbeddingMatrix& embeddings,
                                                          std::string name = "high_dimensional");
/// Euclidean distance between 2-D projected points.
std::unique_ptr<DistanceOracle> projection_distance_oracle(const Projection2D& projection,
                                                           std::string name = "projection");
/// LCA hops from i, ties broken by distance in leaf order. Not symmetric.
std::unique_ptr<DistanceOracle> dendromap_distance_oracle(const Dendrogram& tree);
/// Euclidean distance between the pixel centers of the cells holding i and j.
/// Every image in [0, image_count) must sit on the grid.
std::unique_ptr<DistanceOracle> grid_distance_oracle(const GridAssignment& grid, std::size_t image_count);
/// |pi(i) - pi(j)| for a seeded random permutation pi; a no-structure baseline.
std::unique_ptr<DistanceOracle> random_permutation_oracle(std::size_t size, std::uint64_t seed);

/// Top-n neighbours of i (excluding i) under an oracle.
std::vector<ImageId> top_neighbors(const DistanceOracle& oracle, ImageId i, std::size_t n);

struct OverlapCurve {
  std::string method;
  std::vector<double> mean_overlap;  // parallel to NeighborReport::k_values
};

struct NeighborReport {
  std::size_t points = 0;
  std::vector<std::size_t> k_values;
  std::vector<OverlapCurve> curves;

  const OverlapCurve* curve(std::string_view method) const;
};

/// {1, 5, 10, 25, 50, 100, 200, 300} restricted to k <= n - 1.
std::vector<std::size_t> default_k_values(std::size_t n);

/// For every point and k, |top-k(reference) ∩ top-k(method)|, averaged over all points.
NeighborReport knn_preservation(const DistanceOracle& reference,
                                std::span<const DistanceOracle* const> methods,
                                std::vector<std::size_t> k_values);
NeighborReport knn_preservation(const EmbeddingMatrix& embeddings,
                                std::span<const DistanceOracle* const> methods,
                                std::vector<std::size_t> k_values);

std::string report_to_csv(const NeighborReport& report);
std::string report_to_json(const NeighborReport& report);

}  // namespace dendromap
