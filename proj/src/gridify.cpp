#include "dendromap/gridify.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "dendromap/error.hpp"

namespace dendromap {

BoundingBox BoundingBox::of(const std::vector<Point2>& points) {
  if (points.empty()) return {};
  BoundingBox box{points[0].x, points[0].y, points[0].x, points[0].y};
  for (const auto& p : points) {
    box.min_x = std::min(box.min_x, p.x);
    box.min_y = std::min(box.min_y, p.y);
    box.max_x = std::max(box.max_x, p.x);
    box.max_y = std::max(box.max_y, p.y);
  }
  return box;
}

namespace {

double spaced(double lo, double hi, std::size_t index, std::size_t count) {
  if (count == 1) return (lo + hi) / 2.0;
  return lo + (hi - lo) * static_cast<double>(index) / static_cast<double>(count - 1);
}

GridAssignment gridify_points(const std::vector<Point2>& points, const std::vector<ImageId>& ids,
                              const GridViewport& view) {
  const auto grid = make_grid(points.size(), view, BoundingBox::of(points));
  const std::size_t cells = grid.cols * grid.rows;

  // Rows past the real points are zero-cost dummies; the cells they take stay empty.
  CostMatrix costs(cells);
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (std::size_t g = 0; g < cells; ++g) {
      const double dx = points[p].x - grid.centers[g].x;
      const double dy = points[p].y - grid.centers[g].y;
      costs(p, g) = dx * dx + dy * dy;
    }
  }
  const auto solution = solve_lap(costs);

  GridAssignment out;
  out.grid_cols = grid.cols;
  out.grid_rows = grid.rows;
  out.image_w = view.image_w;
  out.image_h = view.image_h;
  out.cells.assign(cells, std::nullopt);
  for (std::size_t p = 0; p < points.size(); ++p) out.cells[solution.row_to_col[p]] = ids[p];
  out.total_cost = solution.total_cost;
  return out;
}

}  // namespace

GridPoints make_grid(std::size_t n_points, const GridViewport& view, const BoundingBox& box) {
  if (n_points == 0) fail(ErrorCode::InvalidArgument, "grid needs at least one point");
  if (view.image_w <= 0 || view.image_h <= 0 || view.viewport_w < view.image_w ||
      view.viewport_h < view.image_h)
    fail(ErrorCode::DegenerateSpace, "viewport cannot hold one image cell");

  const auto max_cols = static_cast<std::size_t>(view.viewport_w / view.image_w);
  const auto max_rows = static_cast<std::size_t>(view.viewport_h / view.image_h);
  // Smallest cols with cols^2 * max_rows >= n * max_cols, i.e. the grid's
  // shape tracks the viewport's shape in cells.
  std::size_t cols = 1;
  while (cols < max_cols && cols * cols * max_rows < n_points * max_cols) ++cols;

  GridPoints grid;
  grid.cols = cols;
  grid.rows = (n_points + cols - 1) / cols;
  grid.centers.reserve(grid.cols * grid.rows);
  for (std::size_t r = 0; r < grid.rows; ++r)
    for (std::size_t c = 0; c < grid.cols; ++c)
      grid.centers.push_back({spaced(box.min_x, box.max_x, c, grid.cols),
                              spaced(box.min_y, box.max_y, r, grid.rows)});
  return grid;
}

std::size_t GridAssignment::filled() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const auto& cell) { return cell.has_value(); }));
}

std::vector<std::optional<std::size_t>> GridAssignment::cell_of(std::size_t image_count) const {
  std::vector<std::optional<std::size_t>> where(image_count);
  for (std::size_t c = 0; c < cells.size(); ++c)
    if (cells[c] && *cells[c] < image_count) where[*cells[c]] = c;
  return where;
}

GridAssignment gridify(const Projection2D& projection, const GridViewport& view) {
  if (projection.size() == 0) fail(ErrorCode::EmptyInput, "projection has no points");
  std::vector<ImageId> ids(projection.size());
  std::iota(ids.begin(), ids.end(), ImageId{0});
  return gridify_points(projection.points, ids, view);
}

GridAssignment zoom_regrid(const Projection2D& projection, Point2 click, std::size_t k,
                           const GridViewport& view) {
  const std::size_t n = projection.size();
  if (k < 1 || k > n)
    fail(ErrorCode::Range, "k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");

  std::vector<std::pair<double, ImageId>> ranked(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = projection.points[i].x - click.x;
    const double dy = projection.points[i].y - click.y;
    ranked[i] = {dx * dx + dy * dy, i};
  }
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end());

  std::vector<Point2> points;
  std::vector<ImageId> ids;
  points.reserve(k);
  ids.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    ids.push_back(ranked[i].second);
    points.push_back(projection.points[ranked[i].second]);
  }
  return gridify_points(points, ids, view);
}

std::string grid_to_json(const GridAssignment& grid) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& cell : grid.cells) cells.push_back(cell ? nlohmann::json(*cell) : nlohmann::json());
  const nlohmann::json doc = {{"schema_version", 1},
                              {"grid_cols", grid.grid_cols},
                              {"grid_rows", grid.grid_rows},
                              {"image_w", grid.image_w},
                              {"image_h", grid.image_h},
                              {"total_cost", grid.total_cost},
                              {"cells", std::move(cells)}};
  return doc.dump() + "\n";
}

GridAssignment grid_from_json(std::string_view json_text) {
  using nlohmann::json;
  try {
    const auto doc = json::parse(json_text);
    if (doc.at("schema_version").get<int>() != 1) fail(ErrorCode::Parse, "unsupported grid schema_version");
    GridAssignment grid;
    grid.grid_cols = doc.at("grid_cols").get<std::size_t>();
    grid.grid_rows = doc.at("grid_rows").get<std::size_t>();
    grid.image_w = doc.at("image_w").get<std::int64_t>();
    grid.image_h = doc.at("image_h").get<std::int64_t>();
    grid.total_cost = doc.at("total_cost").get<double>();
    for (const auto& cell : doc.at("cells"))
      grid.cells.push_back(cell.is_null() ? std::nullopt : std::optional<ImageId>(cell.get<ImageId>()));
    if (grid.cells.size() != grid.grid_cols * grid.grid_rows)
      fail(ErrorCode::Parse, "grid cell count does not match its dimensions");
    return grid;
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("malformed grid: ") + e.what());
  }
}

}  // namespace dendromap
