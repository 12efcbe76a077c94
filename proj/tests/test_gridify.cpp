#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "dendromap/error.hpp"
#include "dendromap/gridify.hpp"
#include "oracles.hpp"

using namespace dendromap;

namespace {

GridViewport square_view() { return {480, 480, 48, 48}; }

Projection2D random_projection(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> coord(-5.0, 5.0);
  Projection2D p;
  for (std::size_t i = 0; i < n; ++i) p.points.push_back({coord(rng), coord(rng)});
  return p;
}

std::set<ImageId> images_of(const GridAssignment& g) {
  std::set<ImageId> out;
  for (const auto& cell : g.cells)
    if (cell) out.insert(*cell);
  return out;
}

// Each point in turn takes the nearest free cell.
double greedy_snap(const Projection2D& p, const GridPoints& grid) {
  const std::size_t cells = grid.cols * grid.rows;
  CostMatrix costs(cells);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t g = 0; g < cells; ++g) {
      const double dx = p.points[i].x - grid.centers[g].x;
      const double dy = p.points[i].y - grid.centers[g].y;
      costs(i, g) = dx * dx + dy * dy;
    }
  return oracle::greedy_lap(costs);
}

}  // namespace

TEST_CASE("grid shapes") {
  const auto hundred = make_grid(100, square_view());
  CHECK(hundred.cols == 10);
  CHECK(hundred.rows == 10);
  const auto one = make_grid(1, square_view());
  CHECK(one.cols == 1);
  CHECK(one.rows == 1);
  const auto ten = make_grid(10, square_view());
  CHECK(ten.cols == 4);
  CHECK(ten.rows == 3);
  CHECK(ten.cols * ten.rows - 10 == 2);
  const auto wide = make_grid(100, GridViewport{1280, 800, 48, 48});
  CHECK(wide.cols * wide.rows >= 100);
  CHECK(wide.cols > wide.rows);
}

TEST_CASE("grid columns are capped by the viewport") {
  const auto g = make_grid(30, GridViewport{96, 480, 48, 48});
  CHECK(g.cols == 2);
  CHECK(g.rows == 15);
}

TEST_CASE("grid errors") {
  CHECK_THROWS_AS(make_grid(0, square_view()), Error);
  try {
    make_grid(3, GridViewport{10, 10, 48, 48});
    FAIL("expected DegenerateSpace");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateSpace);
  }
}

TEST_CASE("grid centers span the bounding box") {
  const auto g = make_grid(4, square_view(), BoundingBox{0, 0, 2, 2});
  REQUIRE(g.centers.size() == 4);
  CHECK(g.centers[0] == Point2{0, 0});
  CHECK(g.centers[1] == Point2{2, 0});
  CHECK(g.centers[2] == Point2{0, 2});
  CHECK(g.centers[3] == Point2{2, 2});
}

TEST_CASE("points on the cell centers snap with zero cost") {
  Projection2D p{{{0, 0}, {1, 0}, {0, 1}, {1, 1}}};
  const auto g = gridify(p, square_view());
  CHECK(g.grid_cols == 2);
  CHECK(g.total_cost == 0.0);
  CHECK(g.cells == std::vector<std::optional<ImageId>>{0, 1, 2, 3});
}

TEST_CASE("two points on a line keep their order") {
  Projection2D p{{{5, 0}, {-5, 0}}};
  const auto g = gridify(p, GridViewport{96, 48, 48, 48});
  REQUIRE(g.grid_cols == 2);
  REQUIRE(g.grid_rows == 1);
  CHECK(g.cells == std::vector<std::optional<ImageId>>{1, 0});
}

TEST_CASE("random projections: every image once, never worse than greedy") {
  std::mt19937_64 rng(31);
  for (const std::size_t n : {7, 10, 64, 100}) {
    const auto p = random_projection(rng, n);
    const auto g = gridify(p, square_view());
    CHECK(g.filled() == n);
    CHECK(images_of(g).size() == n);
    const auto grid = make_grid(n, square_view(), BoundingBox::of(p.points));
    CHECK(g.total_cost <= greedy_snap(p, grid) + 1e-9);
  }
}

TEST_CASE("cost is invariant under relabeling") {
  std::mt19937_64 rng(37);
  auto p = random_projection(rng, 50);
  const auto a = gridify(p, square_view());
  std::shuffle(p.points.begin(), p.points.end(), rng);
  const auto b = gridify(p, square_view());
  CHECK(a.total_cost == doctest::Approx(b.total_cost).epsilon(1e-12));
}

TEST_CASE("zoom regrid") {
  std::mt19937_64 rng(41);
  const auto p = random_projection(rng, 100);
  const Point2 click{0.5, -1.0};
  const auto g = zoom_regrid(p, click, 25, square_view());
  CHECK(g.grid_cols == 5);
  CHECK(g.grid_rows == 5);
  CHECK(g.filled() == 25);

  std::vector<std::pair<double, ImageId>> ranked;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double dx = p.points[i].x - click.x, dy = p.points[i].y - click.y;
    ranked.push_back({dx * dx + dy * dy, i});
  }
  std::sort(ranked.begin(), ranked.end());
  std::set<ImageId> nearest;
  for (std::size_t i = 0; i < 25; ++i) nearest.insert(ranked[i].second);
  CHECK(images_of(g) == nearest);

  const auto single = zoom_regrid(p, click, 1, square_view());
  CHECK(single.cells == std::vector<std::optional<ImageId>>{ranked[0].second});
  CHECK(images_of(zoom_regrid(p, click, 100, square_view())) == images_of(gridify(p, square_view())));
  CHECK_THROWS_AS(zoom_regrid(p, click, 0, square_view()), Error);
  CHECK_THROWS_AS(zoom_regrid(p, click, 101, square_view()), Error);
}

TEST_CASE("zoom ties go to the smaller index") {
  Projection2D p{{{1, 0}, {-1, 0}, {0, 1}}};
  const auto g = zoom_regrid(p, {0, 0}, 2, square_view());
  CHECK(images_of(g) == std::set<ImageId>{0, 1});
}

TEST_CASE("grid json round trip") {
  std::mt19937_64 rng(43);
  const auto g = gridify(random_projection(rng, 10), square_view());
  const auto text = grid_to_json(g);
  const auto back = grid_from_json(text);
  CHECK(back.cells == g.cells);
  CHECK(grid_to_json(back) == text);
  CHECK_THROWS_AS(grid_from_json("{\"schema_version\":1}"), Error);
}
