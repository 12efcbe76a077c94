#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dendromap/ingest.hpp"

namespace dendromap {

// Dense square cost matrix, row-major. cost(row, col) >= 0 and finite.
class CostMatrix {
 public:
  CostMatrix() = default;
  explicit CostMatrix(std::size_t n) : n_(n), costs_(n * n, 0.0) {}
  CostMatrix(std::size_t n, std::vector<double> costs);

  std::size_t size() const { return n_; }
  double operator()(std::size_t row, std::size_t col) const { return costs_[row * n_ + col]; }
  double& operator()(std::size_t row, std::size_t col) { return costs_[row * n_ + col]; }
  const double* row(std::size_t r) const { return costs_.data() + r * n_; }

  // Throws InvalidArgument on negative or non-finite entries.
  void validate() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> costs_;
};

struct LapSolution {
  std::vector<std::size_t> row_to_col;
  double total_cost = 0.0;  // summed in row order
};

/// Exact minimum-cost assignment (Jonker-Volgenant: column reduction,
/// augmenting row reduction, then shortest augmenting paths). O(n^3) worst case.
LapSolution solve_lap(const CostMatrix& costs);

struct GridViewport {
  std::int64_t viewport_w = 1280;
  std::int64_t viewport_h = 800;
  std::int64_t image_w = 48;
  std::int64_t image_h = 48;
};

struct BoundingBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 1.0;
  double max_y = 1.0;

  static BoundingBox of(const std::vector<Point2>& points);
};

struct GridPoints {
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::vector<Point2> centers;  // row-major, in projection coordinates
};

/// cols x rows grid with at least n_points cells. The column count follows
/// the viewport's cell aspect (ceil(sqrt(n)) for a square one) capped at
/// floor(viewport_w / image_w); centers span `box` corner to corner.
GridPoints make_grid(std::size_t n_points, const GridViewport& view,
                     const BoundingBox& box = BoundingBox{});

struct GridAssignment {
  std::size_t grid_cols = 0;
  std::size_t grid_rows = 0;
  std::int64_t image_w = 0;  // cell pitch in pixels
  std::int64_t image_h = 0;
  std::vector<std::optional<ImageId>> cells;  // row-major
  double total_cost = 0.0;

  std::size_t filled() const;
  /// Cell index of every image, keyed by image id; images not on the grid are absent.
  std::vector<std::optional<std::size_t>> cell_of(std::size_t image_count) const;
};

/// Snaps every projected point to its own grid cell, minimising the sum of
/// squared distances between points and cell centers.
GridAssignment gridify(const Projection2D& projection, const GridViewport& view);

/// Gridifies only the k projected points nearest to `click` (ties by id).
GridAssignment zoom_regrid(const Projection2D& projection, Point2 click, std::size_t k,
                           const GridViewport& view);

std::string grid_to_json(const GridAssignment& grid);
GridAssignment grid_from_json(std::string_view json_text);

}  // namespace dendromap
