#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "bisbm/adjacency.hpp"
#include "bisbm/common.hpp"
#include "bisbm/labels.hpp"
#include "bisbm/parallel.hpp"
#include "bisbm/rng.hpp"

namespace bisbm {

// Edge probability matrix P of the bipartite block model.
struct Connectivity {
  Matrix p;  // K x L

  Connectivity() = default;
  explicit Connectivity(Matrix probs) : p(std::move(probs)) { validate(); }

  int k() const { return static_cast<int>(p.rows()); }
  int l() const { return static_cast<int>(p.cols()); }

  void validate() const {
    if (p.rows() < 1 || p.cols() < 1) throw DimensionError("Connectivity: K, L must be >= 1");
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index j = 0; j < p.cols(); ++j)
        if (p(i, j) < 0.0 || p(i, j) > 1.0)
          throw ConfigError("Connectivity: entries must lie in [0,1]");
  }
};

// Poisson mean parameters (Lambda or Gamma or a local version of either).
struct MeanParams {
  Matrix lambda;  // K x L, nonnegative

  MeanParams() = default;
  explicit MeanParams(Matrix m) : lambda(std::move(m)) {
    for (Eigen::Index i = 0; i < lambda.rows(); ++i)
      for (Eigen::Index j = 0; j < lambda.cols(); ++j)
        if (lambda(i, j) < 0.0) throw DimensionError("MeanParams: negative entry");
  }

  int k() const { return static_cast<int>(lambda.rows()); }
  int l() const { return static_cast<int>(lambda.cols()); }
  double min() const { return lambda.minCoeff(); }
  double max() const { return lambda.maxCoeff(); }
};

// Lambda_{kl} = P_{kl} * n_l(z). The dual call with transposed P and row
// labels yields Gamma (Gamma_{lk} = n_k(y) * P_{kl}).
inline MeanParams true_mean_params(const Connectivity& p, const HardLabels& z) {
  if (z.num_classes != p.l())
    throw DimensionError("true_mean_params: label classes != P columns");
  const auto counts = z.class_counts();
  Matrix lam(p.k(), p.l());
  for (int k = 0; k < p.k(); ++k)
    for (int l = 0; l < p.l(); ++l)
      lam(k, l) = p.p(k, l) * static_cast<double>(counts[static_cast<std::size_t>(l)]);
  return MeanParams(std::move(lam));
}

inline MeanParams column_mean_params(const Connectivity& p, const HardLabels& y) {
  return true_mean_params(Connectivity(p.p.transpose()), y);
}

enum class SbmMode { Bernoulli, Poisson };

// Independent entries with mean P_{y_i z_j}. Rows are sampled from per-row
// derived streams, so the result is bit-identical for any thread count.
inline BiAdjacency sample_sbm(const Connectivity& p, const HardLabels& y, const HardLabels& z,
                              std::uint64_t seed, SbmMode mode, int threads = 1) {
  if (y.num_classes != p.k()) throw DimensionError("sample_sbm: y classes != K");
  if (z.num_classes != p.l()) throw DimensionError("sample_sbm: z classes != L");
  const std::int64_t n = static_cast<std::int64_t>(y.size());
  const std::int64_t m = static_cast<std::int64_t>(z.size());
  const std::uint64_t mode_tag = mode == SbmMode::Bernoulli ? 1 : 2;
  std::vector<std::vector<BiAdjacency::Entry>> per_row(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    Rng r(Rng::derive(seed, {mode_tag, static_cast<std::uint64_t>(i)}));
    auto& out = per_row[i];
    const int yi = y.a[i];
    for (std::int64_t j = 0; j < m; ++j) {
      const double pij = p.p(yi, z.a[static_cast<std::size_t>(j)]);
      if (mode == SbmMode::Bernoulli) {
        if (r.bernoulli(pij)) out.emplace_back(static_cast<std::int64_t>(i), j, 1.0);
      } else {
        const std::uint64_t c = r.poisson(pij);
        if (c > 0) out.emplace_back(static_cast<std::int64_t>(i), j, static_cast<double>(c));
      }
    }
  });
  std::vector<BiAdjacency::Entry> entries;
  for (auto& v : per_row) entries.insert(entries.end(), v.begin(), v.end());
  return BiAdjacency::from_entries(n, m, std::move(entries), mode == SbmMode::Bernoulli);
}

struct ModelDiagnostics {
  double omega = 0.0;  // ||Lambda||_inf/Lambda_min  v  ||Gamma||_inf/Gamma_min
  double beta = 0.0;   // cluster balance
  double alpha = 0.0;  // m / n
  Matrix j_kr;         // L ||Lambda||_inf / I_kr
};

// info_kr is the K x K pairwise Chernoff information matrix for Lambda
// (see chernoff_info). Degenerate values are encoded as infinities.
inline ModelDiagnostics diagnostics(const MeanParams& lambda, const MeanParams& gamma,
                                    const HardLabels& y, const HardLabels& z,
                                    const Matrix& info_kr) {
  const double inf = std::numeric_limits<double>::infinity();
  ModelDiagnostics d;
  auto ratio = [&](const MeanParams& mp) {
    const double mn = mp.min();
    return mn > 0.0 ? mp.max() / mn : inf;
  };
  d.omega = std::max(ratio(lambda), ratio(gamma));
  auto side_beta = [&](const HardLabels& h) {
    double b = 1.0;
    const double k = static_cast<double>(h.num_classes);
    for (double pi : h.proportions()) {
      if (pi <= 0.0) return inf;
      b = std::max({b, pi * k, 1.0 / (pi * k)});
    }
    return b;
  };
  d.beta = std::max(side_beta(y), side_beta(z));
  d.alpha = static_cast<double>(z.size()) / static_cast<double>(y.size());
  const double num = static_cast<double>(lambda.l()) * lambda.max();
  d.j_kr = Matrix::Constant(lambda.k(), lambda.k(), inf);
  for (int k = 0; k < lambda.k(); ++k)
    for (int r = 0; r < lambda.k(); ++r)
      if (info_kr(k, r) > 0.0 && std::isfinite(info_kr(k, r))) d.j_kr(k, r) = num / info_kr(k, r);
  return d;
}

}  // namespace bisbm
