#include <cmath>
#include <limits>
#include <utility>

#include "dendromap/error.hpp"
#include "dendromap/gridify.hpp"

namespace dendromap {

CostMatrix::CostMatrix(std::size_t n, std::vector<double> costs) : n_(n), costs_(std::move(costs)) {
  if (costs_.size() != n_ * n_) fail(ErrorCode::InvalidArgument, "cost matrix must be square");
}

void CostMatrix::validate() const {
  for (const double c : costs_)
    if (!std::isfinite(c) || c < 0.0)
      fail(ErrorCode::InvalidArgument, "cost matrix entries must be finite and non-negative");
}

namespace {

constexpr std::ptrdiff_t kFree = -1;
constexpr double kInf = std::numeric_limits<double>::infinity();

class JonkerVolgenant {
 public:
  explicit JonkerVolgenant(const CostMatrix& costs)
      : c_(costs), n_(costs.size()), x_(n_, kFree), y_(n_, kFree), v_(n_, kInf) {}

  std::vector<std::ptrdiff_t> solve() {
    auto free_rows = column_reduction();
    // Two rounds of augmenting row reduction, as in the original algorithm.
    for (int round = 0; round < 2 && !free_rows.empty(); ++round) free_rows = row_reduction(free_rows);
    for (const auto row : free_rows) augment(row);
    return x_;
  }

 private:
  double reduced(std::size_t i, std::size_t j) const { return c_(i, j) - v_[j]; }

  // Column reduction followed by reduction transfer. Returns the free rows.
  std::vector<std::size_t> column_reduction() {
    for (std::size_t i = 0; i < n_; ++i) {
      const double* row = c_.row(i);
      for (std::size_t j = 0; j < n_; ++j) {
        if (row[j] < v_[j]) {
          v_[j] = row[j];
          y_[j] = static_cast<std::ptrdiff_t>(i);
        }
      }
    }

    std::vector<char> unique(n_, 1);
    for (std::size_t j = n_; j-- > 0;) {
      const auto i = static_cast<std::size_t>(y_[j]);
      if (x_[i] == kFree) {
        x_[i] = static_cast<std::ptrdiff_t>(j);
      } else {
        unique[i] = 0;
        y_[j] = kFree;
      }
    }

    std::vector<std::size_t> free_rows;
    for (std::size_t i = 0; i < n_; ++i) {
      if (x_[i] == kFree) {
        free_rows.push_back(i);
      } else if (unique[i]) {
        const auto j = static_cast<std::size_t>(x_[i]);
        double best = kInf;
        for (std::size_t j2 = 0; j2 < n_; ++j2)
          if (j2 != j) best = std::min(best, reduced(i, j2));
        if (best < kInf) v_[j] -= best;
      }
    }
    return free_rows;
  }

  // Augmenting row reduction: each free row claims its cheapest column and
  // lowers that column's price by the gap to its second cheapest.
  std::vector<std::size_t> row_reduction(std::vector<std::size_t> free_rows) {
    const std::size_t initial = free_rows.size();
    std::size_t current = 0;
    std::size_t next_free = 0;
    std::size_t iterations = 0;
    while (current < initial) {
      ++iterations;
      const std::size_t i = free_rows[current++];

      std::size_t j1 = 0;
      double u1 = reduced(i, 0);
      std::ptrdiff_t j2 = kFree;
      double u2 = kInf;
      for (std::size_t j = 1; j < n_; ++j) {
        const double h = reduced(i, j);
        if (h < u2) {
          if (h >= u1) {
            u2 = h;
            j2 = static_cast<std::ptrdiff_t>(j);
          } else {
            u2 = u1;
            u1 = h;
            j2 = static_cast<std::ptrdiff_t>(j1);
            j1 = j;
          }
        }
      }

      std::ptrdiff_t i0 = y_[j1];
      const double lowered = v_[j1] - (u2 - u1);
      const bool lowers = lowered < v_[j1];
      if (iterations < current * n_) {
        if (lowers) {
          v_[j1] = lowered;
        } else if (i0 != kFree && j2 != kFree) {
          j1 = static_cast<std::size_t>(j2);
          i0 = y_[j1];
        }
        if (i0 != kFree) {
          if (lowers)
            free_rows[--current] = static_cast<std::size_t>(i0);
          else
            free_rows[next_free++] = static_cast<std::size_t>(i0);
        }
      } else if (i0 != kFree) {
        free_rows[next_free++] = static_cast<std::size_t>(i0);
      }
      x_[i] = static_cast<std::ptrdiff_t>(j1);
      y_[j1] = static_cast<std::ptrdiff_t>(i);
      if (i0 != kFree && x_[static_cast<std::size_t>(i0)] == static_cast<std::ptrdiff_t>(j1))
        x_[static_cast<std::size_t>(i0)] = kFree;
    }
    free_rows.resize(next_free);
    return free_rows;
  }

  // Dijkstra-style shortest augmenting path from a free row over reduced
  // costs; `cols` is partitioned into [0, lo) scanned, [lo, hi) at the current
  // minimum distance, [hi, n) unreached.
  void augment(std::size_t start) {
    std::vector<std::size_t> cols(n_);
    std::vector<double> d(n_);
    std::vector<std::size_t> pred(n_, start);
    for (std::size_t j = 0; j < n_; ++j) {
      cols[j] = j;
      d[j] = reduced(start, j);
    }

    std::size_t lo = 0;
    std::size_t hi = 0;
    std::size_t ready = 0;
    std::ptrdiff_t target = kFree;
    while (target == kFree) {
      if (lo == hi) {
        ready = lo;
        hi = collect_minimum(lo, d, cols);
        for (std::size_t k = lo; k < hi; ++k) {
          if (y_[cols[k]] == kFree) {
            target = static_cast<std::ptrdiff_t>(cols[k]);
            break;
          }
        }
      }
      if (target == kFree) target = scan(lo, hi, d, cols, pred);
    }

    const double min_d = d[cols[lo]];
    for (std::size_t k = 0; k < ready; ++k) v_[cols[k]] += d[cols[k]] - min_d;

    auto j = static_cast<std::size_t>(target);
    while (true) {
      const std::size_t i = pred[j];
      y_[j] = static_cast<std::ptrdiff_t>(i);
      const auto previous = x_[i];
      x_[i] = static_cast<std::ptrdiff_t>(j);
      if (i == start) break;
      j = static_cast<std::size_t>(previous);
    }
  }

  // Moves every column in [lo, n) with the smallest distance to [lo, hi).
  std::size_t collect_minimum(std::size_t lo, const std::vector<double>& d,
                              std::vector<std::size_t>& cols) const {
    std::size_t hi = lo + 1;
    double min_d = d[cols[lo]];
    for (std::size_t k = hi; k < n_; ++k) {
      const std::size_t j = cols[k];
      if (d[j] <= min_d) {
        if (d[j] < min_d) {
          hi = lo;
          min_d = d[j];
        }
        cols[k] = cols[hi];
        cols[hi++] = j;
      }
    }
    return hi;
  }

  // Relaxes distances through the rows matched to the minimum columns. The
  // window only advances when no free column was reached, so the caller can
  // still read the minimum distance at cols[lo].
  std::ptrdiff_t scan(std::size_t& window_lo, std::size_t& window_hi, std::vector<double>& d,
                      std::vector<std::size_t>& cols, std::vector<std::size_t>& pred) const {
    std::size_t lo = window_lo;
    std::size_t hi = window_hi;
    while (lo != hi) {
      std::size_t j = cols[lo++];
      const auto i = static_cast<std::size_t>(y_[j]);
      const double min_d = d[j];
      const double h = reduced(i, j) - min_d;
      for (std::size_t k = hi; k < n_; ++k) {
        j = cols[k];
        const double candidate = reduced(i, j) - h;
        if (candidate < d[j]) {
          d[j] = candidate;
          pred[j] = i;
          if (candidate == min_d) {
            if (y_[j] == kFree) return static_cast<std::ptrdiff_t>(j);
            cols[k] = cols[hi];
            cols[hi++] = j;
          }
        }
      }
    }
    window_lo = lo;
    window_hi = hi;
    return kFree;
  }

  const CostMatrix& c_;
  std::size_t n_;
  std::vector<std::ptrdiff_t> x_;  // row -> column
  std::vector<std::ptrdiff_t> y_;  // column -> row
  std::vector<double> v_;          // column prices
};

}  // namespace

LapSolution solve_lap(const CostMatrix& costs) {
  costs.validate();
  LapSolution solution;
  const std::size_t n = costs.size();
  if (n == 0) return solution;
  solution.row_to_col.resize(n);
  if (n == 1) {
    solution.row_to_col[0] = 0;
    solution.total_cost = costs(0, 0);
    return solution;
  }

  const auto assignment = JonkerVolgenant(costs).solve();
  std::vector<char> used(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = assignment[i];
    // JV always ends with a full permutation.
    if (j == kFree || used[static_cast<std::size_t>(j)])
      fail(ErrorCode::InvalidArgument, "assignment solver did not produce a permutation");
    used[static_cast<std::size_t>(j)] = 1;
    solution.row_to_col[i] = static_cast<std::size_t>(j);
    solution.total_cost += costs(i, solution.row_to_col[i]);
  }
  return solution;
}

}  // namespace dendromap
