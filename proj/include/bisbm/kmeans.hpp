#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "bisbm/common.hpp"
#include "bisbm/parallel.hpp"
#include "bisbm/rng.hpp"

namespace bisbm {

struct KMeansResult {
  std::vector<int> labels;
  Matrix centers;
  double wcss = 0.0;
  int empty_repairs = 0;
};

namespace detail {

inline double sq_dist(const Matrix& x, Eigen::Index i, const Matrix& c, int j) {
  double s = 0.0;
  for (Eigen::Index d = 0; d < x.cols(); ++d) {
    const double diff = x(i, d) - c(j, d);
    s += diff * diff;
  }
  return s;
}

inline KMeansResult kmeans_single(const Matrix& x, int k, int max_iter, Rng rng) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  KMeansResult res;
  res.labels.assign(static_cast<std::size_t>(n), 0);
  res.centers = Matrix::Zero(k, d);
  if (n == 0) return res;
  if (n <= k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      res.labels[static_cast<std::size_t>(i)] = static_cast<int>(i);
      res.centers.row(i) = x.row(i);
    }
    return res;
  }

  // k-means++ seeding: D^2 sampling depends only on pairwise distances.
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  Eigen::Index first = static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(n)));
  res.centers.row(0) = x.row(first);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] =
          std::min(d2[static_cast<std::size_t>(i)], sq_dist(x, i, res.centers, c - 1));
      total += d2[static_cast<std::size_t>(i)];
    }
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[static_cast<std::size_t>(i)];
        if (u < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    }
    res.centers.row(c) = x.row(pick);
  }

  std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    // Assignment; nearest-center ties go to the lowest center index.
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = sq_dist(x, i, res.centers, 0);
      for (int c = 1; c < k; ++c) {
        const double dist = sq_dist(x, i, res.centers, c);
        if (dist < bd) {
          bd = dist;
          best = c;
        }
      }
      if (res.labels[static_cast<std::size_t>(i)] != best) {
        res.labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    // Update.
    res.centers.setZero();
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      res.centers.row(res.labels[static_cast<std::size_t>(i)]) += x.row(i);
      ++counts[static_cast<std::size_t>(res.labels[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0)
        res.centers.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    // Empty-cluster repair: re-seed at the point farthest from its center.
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far = 0;
      double fd = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double dist = sq_dist(x, i, res.centers, res.labels[static_cast<std::size_t>(i)]);
        if (dist > fd) {
          fd = dist;
          far = i;
        }
      }
      res.centers.row(c) = x.row(far);
      ++res.empty_repairs;
      changed = true;
    }
    if (!changed) break;
  }

  res.wcss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    res.wcss += sq_dist(x, i, res.centers, res.labels[static_cast<std::size_t>(i)]);
  return res;
}

}  // namespace detail

// k-means++ with restarts; best within-cluster sum of squares wins, ties by
// lowest restart index. Restarts use per-restart derived streams and may run
// in parallel without affecting the result.
inline KMeansResult kmeans(const Matrix& x, int k, int restarts, int max_iter, std::uint64_t seed,
                           int threads = 1) {
  if (k < 1) throw DimensionError("kmeans: k must be >= 1");
  restarts = std::max(restarts, 1);
  std::vector<KMeansResult> all(static_cast<std::size_t>(restarts));
  parallel_for(static_cast<std::size_t>(restarts), threads, [&](std::size_t t) {
    all[t] = detail::kmeans_single(x, k, max_iter,
                                   Rng(Rng::derive(seed, static_cast<std::uint64_t>(t))));
  });
  std::size_t best = 0;
  for (std::size_t t = 1; t < all.size(); ++t)
    if (all[t].wcss < all[best].wcss) best = t;
  return all[best];
}

}  // namespace bisbm
