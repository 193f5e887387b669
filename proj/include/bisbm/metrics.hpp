#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "bisbm/assignment.hpp"
#include "bisbm/common.hpp"
#include "bisbm/labels.hpp"

namespace bisbm {

// counts(k, k') = |{i : y_i = k, y_hat_i = k'}|. Padded with zero rows or
// columns to square when the two labelings disagree on K.
struct ConfusionMatrix {
  Eigen::MatrixX<std::int64_t> counts;

  ConfusionMatrix(const HardLabels& y_hat, const HardLabels& y) {
    if (y_hat.size() != y.size()) throw DimensionError("ConfusionMatrix: length mismatch");
    const int k = std::max(y_hat.num_classes, y.num_classes);
    counts = Eigen::MatrixX<std::int64_t>::Zero(k, k);
    for (std::size_t i = 0; i < y.size(); ++i) ++counts(y.a[i], y_hat.a[i]);
  }

  int k() const { return static_cast<int>(counts.rows()); }
};

// Permutation sigma on predicted classes maximizing |{i : sigma(y_hat_i) = y_i}|,
// solved as a linear assignment; lexicographically smallest among optima.
inline std::vector<int> optimal_permutation(const HardLabels& y_hat, const HardLabels& y) {
  const ConfusionMatrix cm(y_hat, y);
  const int k = cm.k();
  Matrix cost(k, k);
  for (int c = 0; c < k; ++c)
    for (int t = 0; t < k; ++t) cost(c, t) = -static_cast<double>(cm.counts(t, c));
  return lex_min_optimal_assignment(cost);
}

// Normalized Hamming distance (identity permutation).
inline double dmis(const HardLabels& y_hat, const HardLabels& y) {
  if (y_hat.size() != y.size()) throw DimensionError("dmis: length mismatch");
  if (y.size() == 0) return 0.0;
  std::int64_t bad = 0;
  for (std::size_t i = 0; i < y.size(); ++i) bad += (y_hat.a[i] != y.a[i]);
  return static_cast<double>(bad) / static_cast<double>(y.size());
}

inline double mis(const HardLabels& y_hat, const HardLabels& y) {
  const auto sigma = optimal_permutation(y_hat, y);
  std::int64_t bad = 0;
  for (std::size_t i = 0; i < y.size(); ++i) bad += (sigma[static_cast<std::size_t>(y_hat.a[i])] != y.a[i]);
  return y.size() == 0 ? 0.0 : static_cast<double>(bad) / static_cast<double>(y.size());
}

// Per-cluster misclassification over the true cluster k, using the same
// optimal permutation as mis().
inline double mis_k(const HardLabels& y_hat, const HardLabels& y, int k) {
  const auto sigma = optimal_permutation(y_hat, y);
  std::int64_t bad = 0, nk = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y.a[i] != k) continue;
    ++nk;
    bad += (sigma[static_cast<std::size_t>(y_hat.a[i])] != k);
  }
  return nk == 0 ? 0.0 : static_cast<double>(bad) / static_cast<double>(nk);
}

inline std::vector<double> mis_per_class(const HardLabels& y_hat, const HardLabels& y) {
  const auto sigma = optimal_permutation(y_hat, y);
  const int k = std::max(y_hat.num_classes, y.num_classes);
  std::vector<std::int64_t> bad(static_cast<std::size_t>(k), 0), nk(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    ++nk[static_cast<std::size_t>(y.a[i])];
    bad[static_cast<std::size_t>(y.a[i])] += (sigma[static_cast<std::size_t>(y_hat.a[i])] != y.a[i]);
  }
  std::vector<double> out(static_cast<std::size_t>(k), 0.0);
  for (int c = 0; c < k; ++c)
    out[static_cast<std::size_t>(c)] =
        nk[static_cast<std::size_t>(c)] == 0
            ? 0.0
            : static_cast<double>(bad[static_cast<std::size_t>(c)]) /
                  static_cast<double>(nk[static_cast<std::size_t>(c)]);
  return out;
}

// I(y_hat; y) / sqrt(H(y_hat) H(y)), natural logs, from the empirical joint.
// Both labelings constant -> 1; exactly one constant -> 0.
inline double nmi(const HardLabels& y_hat, const HardLabels& y) {
  if (y_hat.size() != y.size()) throw DimensionError("nmi: length mismatch");
  const double n = static_cast<double>(y.size());
  if (n == 0) return 1.0;
  const ConfusionMatrix cm(y_hat, y);
  const int k = cm.k();
  std::vector<double> pt(static_cast<std::size_t>(k), 0.0), pp(static_cast<std::size_t>(k), 0.0);
  for (int t = 0; t < k; ++t)
    for (int c = 0; c < k; ++c) {
      pt[static_cast<std::size_t>(t)] += static_cast<double>(cm.counts(t, c)) / n;
      pp[static_cast<std::size_t>(c)] += static_cast<double>(cm.counts(t, c)) / n;
    }
  double ht = 0.0, hp = 0.0, mi = 0.0;
  for (int t = 0; t < k; ++t)
    if (pt[static_cast<std::size_t>(t)] > 0.0)
      ht -= pt[static_cast<std::size_t>(t)] * std::log(pt[static_cast<std::size_t>(t)]);
  for (int c = 0; c < k; ++c)
    if (pp[static_cast<std::size_t>(c)] > 0.0)
      hp -= pp[static_cast<std::size_t>(c)] * std::log(pp[static_cast<std::size_t>(c)]);
  for (int t = 0; t < k; ++t)
    for (int c = 0; c < k; ++c) {
      const double pj = static_cast<double>(cm.counts(t, c)) / n;
      if (pj > 0.0)
        mi += pj * std::log(pj / (pt[static_cast<std::size_t>(t)] * pp[static_cast<std::size_t>(c)]));
    }
  if (ht <= 0.0 && hp <= 0.0) return 1.0;
  if (ht <= 0.0 || hp <= 0.0) return 0.0;
  const double v = mi / std::sqrt(ht * hp);
  return std::min(1.0, std::max(0.0, v));
}

}  // namespace bisbm
