#pragma once

#include <limits>
#include <vector>

#include "bisbm/common.hpp"

namespace bisbm {

// O(k^3) Hungarian algorithm (potentials formulation) for the min-cost
// perfect assignment on a square cost matrix. Returns row -> column.
inline std::vector<int> hungarian_min(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw DimensionError("hungarian_min: matrix not square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0),
      v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> ans(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    if (p[static_cast<std::size_t>(j)] > 0) ans[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
  return ans;
}

inline double assignment_cost(const Matrix& cost, const std::vector<int>& perm) {
  double s = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i) s += cost(static_cast<Eigen::Index>(i), perm[i]);
  return s;
}

// Lexicographically smallest optimal assignment: fix rows in order, keeping
// the smallest column that still admits an optimal completion (checked by
// solving the reduced problem).
inline std::vector<int> lex_min_optimal_assignment(const Matrix& cost, double tol = 1e-9) {
  const int k = static_cast<int>(cost.rows());
  const double best = assignment_cost(cost, hungarian_min(cost));
  std::vector<int> fixed(static_cast<std::size_t>(k), -1);
  std::vector<char> col_used(static_cast<std::size_t>(k), 0);
  double fixed_cost = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int c = 0; c < k; ++c) {
      if (col_used[static_cast<std::size_t>(c)]) continue;
      double sub_cost = 0.0;
      const int rem = k - i - 1;
      if (rem > 0) {
        Matrix sub(rem, rem);
        int cj = 0;
        std::vector<int> free_cols;
        for (int j = 0; j < k; ++j)
          if (!col_used[static_cast<std::size_t>(j)] && j != c) free_cols.push_back(j);
        for (int r = i + 1; r < k; ++r) {
          cj = 0;
          for (int j : free_cols) sub(r - i - 1, cj++) = cost(r, j);
        }
        sub_cost = assignment_cost(sub, hungarian_min(sub));
      }
      if (fixed_cost + cost(i, c) + sub_cost <= best + tol) {
        fixed[static_cast<std::size_t>(i)] = c;
        col_used[static_cast<std::size_t>(c)] = 1;
        fixed_cost += cost(i, c);
        break;
      }
    }
  }
  return fixed;
}

}  // namespace bisbm
