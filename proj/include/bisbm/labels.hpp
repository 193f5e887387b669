#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bisbm/common.hpp"
#include "bisbm/rng.hpp"

namespace bisbm {

// Hard cluster assignments. Classes are 0-based everywhere in code and in
// all file formats.
struct HardLabels {
  std::vector<int> a;
  int num_classes = 0;

  HardLabels() = default;
  HardLabels(std::vector<int> assignments, int k) : a(std::move(assignments)), num_classes(k) {
    validate();
  }

  std::size_t size() const { return a.size(); }

  void validate() const {
    if (num_classes < 1) throw DimensionError("HardLabels: num_classes must be >= 1");
    for (int v : a)
      if (v < 0 || v >= num_classes)
        throw DimensionError("HardLabels: entry out of range [0, K)");
  }

  std::vector<std::int64_t> class_counts() const {
    std::vector<std::int64_t> c(num_classes, 0);
    for (int v : a) ++c[v];
    return c;
  }

  std::vector<double> proportions() const {
    std::vector<double> p(num_classes, 0.0);
    if (a.empty()) return p;
    for (int v : a) p[v] += 1.0;
    for (double& x : p) x /= static_cast<double>(a.size());
    return p;
  }

  bool operator==(const HardLabels& o) const {
    return num_classes == o.num_classes && a == o.a;
  }
};

// Soft assignments: rows are probability vectors over the K classes.
struct SoftLabels {
  Matrix w;  // n x K

  SoftLabels() = default;
  explicit SoftLabels(Matrix weights) : w(std::move(weights)) {}

  std::size_t size() const { return static_cast<std::size_t>(w.rows()); }
  int num_classes() const { return static_cast<int>(w.cols()); }

  void validate(double tol = 1e-9) const {
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < w.cols(); ++k) {
        if (w(i, k) < -tol) throw DimensionError("SoftLabels: negative weight");
        s += w(i, k);
      }
      if (std::abs(s - 1.0) > tol) throw DimensionError("SoftLabels: row does not sum to 1");
    }
  }
};

inline SoftLabels one_hot(const HardLabels& h) {
  Matrix w = Matrix::Zero(static_cast<Eigen::Index>(h.size()), h.num_classes);
  for (std::size_t i = 0; i < h.size(); ++i) w(static_cast<Eigen::Index>(i), h.a[i]) = 1.0;
  return SoftLabels(std::move(w));
}

// MAP assignment per row; ties broken uniformly at random from the argmax
// set using a per-row stream derived from (seed, row).
inline HardLabels harden(const SoftLabels& s, std::uint64_t seed = 0) {
  const Eigen::Index n = s.w.rows();
  const int k = s.num_classes();
  std::vector<int> out(static_cast<std::size_t>(n));
  std::vector<int> ties;
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = s.w(i, 0);
    ties.assign(1, 0);
    for (int c = 1; c < k; ++c) {
      double v = s.w(i, c);
      if (v > best) {
        best = v;
        ties.assign(1, c);
      } else if (v == best) {
        ties.push_back(c);
      }
    }
    if (ties.size() == 1) {
      out[static_cast<std::size_t>(i)] = ties[0];
    } else {
      Rng r(Rng::derive(seed, static_cast<std::uint64_t>(i)));
      out[static_cast<std::size_t>(i)] = ties[static_cast<std::size_t>(r.uniform_int(ties.size()))];
    }
  }
  return HardLabels(std::move(out), k);
}

// Apply a class permutation: out_i = sigma[in_i].
inline HardLabels apply_permutation(const HardLabels& h, const std::vector<int>& sigma) {
  if (static_cast<int>(sigma.size()) != h.num_classes)
    throw DimensionError("apply_permutation: permutation size != K");
  HardLabels out = h;
  for (auto& v : out.a) v = sigma[v];
  return out;
}

inline std::vector<int> compose(const std::vector<int>& outer, const std::vector<int>& inner) {
  // (outer ∘ inner)(x) = outer[inner[x]]
  std::vector<int> out(inner.size());
  for (std::size_t i = 0; i < inner.size(); ++i) out[i] = outer[inner[i]];
  return out;
}

inline std::vector<int> invert(const std::vector<int>& sigma) {
  std::vector<int> out(sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i) out[sigma[i]] = static_cast<int>(i);
  return out;
}

inline std::vector<int> identity_permutation(int k) {
  std::vector<int> out(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = i;
  return out;
}

// Deterministic labels matching given proportions as closely as possible
// (largest-remainder rounding), assigned in contiguous blocks.
inline HardLabels labels_from_proportions(std::size_t n, const std::vector<double>& pi) {
  const int k = static_cast<int>(pi.size());
  std::vector<std::int64_t> counts(pi.size());
  std::vector<std::pair<double, int>> rem(pi.size());
  std::int64_t total = 0;
  for (int c = 0; c < k; ++c) {
    double exact = pi[static_cast<std::size_t>(c)] * static_cast<double>(n);
    counts[static_cast<std::size_t>(c)] = static_cast<std::int64_t>(exact);
    rem[static_cast<std::size_t>(c)] = {exact - std::floor(exact), c};
    total += counts[static_cast<std::size_t>(c)];
  }
  std::sort(rem.begin(), rem.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second < y.second;
  });
  for (std::size_t i = 0; total < static_cast<std::int64_t>(n); ++i, ++total)
    counts[static_cast<std::size_t>(rem[i % rem.size()].second)]++;
  std::vector<int> a;
  a.reserve(n);
  for (int c = 0; c < k; ++c)
    for (std::int64_t i = 0; i < counts[static_cast<std::size_t>(c)]; ++i) a.push_back(c);
  a.resize(n);
  return HardLabels(std::move(a), k);
}

inline HardLabels balanced_labels(std::size_t n, int k) {
  return labels_from_proportions(n, std::vector<double>(static_cast<std::size_t>(k), 1.0 / k));
}

inline HardLabels random_labels(std::size_t n, const std::vector<double>& pi, std::uint64_t seed) {
  std::vector<int> a(n);
  Rng r(seed);
  for (std::size_t i = 0; i < n; ++i) {
    double u = r.uniform();
    double acc = 0.0;
    int cls = static_cast<int>(pi.size()) - 1;
    for (std::size_t c = 0; c < pi.size(); ++c) {
      acc += pi[c];
      if (u < acc) {
        cls = static_cast<int>(c);
        break;
      }
    }
    a[i] = cls;
  }
  return HardLabels(std::move(a), static_cast<int>(pi.size()));
}

}  // namespace bisbm
