#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bisbm/adjacency.hpp"
#include "bisbm/common.hpp"
#include "bisbm/labels.hpp"
#include "bisbm/model.hpp"
#include "bisbm/parallel.hpp"
#include "bisbm/rng.hpp"

namespace bisbm {

// b_{il} = sum_j A_ij 1{z_j = l}; real-valued when soft labels are used.
struct BlockCompression {
  Matrix b;  // n x L

  std::int64_t n() const { return b.rows(); }
  int l() const { return static_cast<int>(b.cols()); }
};

// Row class prior. The flat prior is stored unnormalized (all ones) and
// flagged, so posterior invariance to positive scaling is exercised.
struct ClassPrior {
  Vector pi;
  bool flat = false;

  static ClassPrior flat_prior(int k) {
    ClassPrior p;
    p.pi = Vector::Ones(k);
    p.flat = true;
    return p;
  }

  static ClassPrior empirical(const SoftLabels& y) {
    ClassPrior p;
    p.pi = y.w.colwise().mean();
    return p;
  }

  static ClassPrior empirical(const HardLabels& y) { return empirical(one_hot(y)); }
};

inline BlockCompression block_compress(const BiAdjacency& a, const HardLabels& z) {
  if (static_cast<std::int64_t>(z.size()) != a.cols())
    throw DimensionError("block_compress: z size != columns");
  BlockCompression out;
  out.b = Matrix::Zero(a.rows(), z.num_classes);
  for (std::int64_t i = 0; i < a.rows(); ++i)
    for (std::size_t p = a.row_begin(i); p < a.row_end(i); ++p)
      out.b(i, z.a[static_cast<std::size_t>(a.col_at(p))]) += a.val_at(p);
  return out;
}

inline BlockCompression block_compress(const BiAdjacency& a, const SoftLabels& z) {
  if (static_cast<std::int64_t>(z.size()) != a.cols())
    throw DimensionError("block_compress: z size != columns");
  BlockCompression out;
  const int L = z.num_classes();
  out.b = Matrix::Zero(a.rows(), L);
  for (std::int64_t i = 0; i < a.rows(); ++i)
    for (std::size_t p = a.row_begin(i); p < a.row_end(i); ++p) {
      const double v = a.val_at(p);
      const Eigen::Index j = a.col_at(p);
      for (int l = 0; l < L; ++l) out.b(i, l) += v * z.w(j, l);
    }
  return out;
}

struct MeansResult {
  MeanParams lambda;
  std::vector<int> empty_classes;  // classes whose row was re-seeded
};

namespace detail {

inline MeansResult finish_means(Matrix num, Vector den, const Matrix& b) {
  MeansResult out;
  const int k = static_cast<int>(num.rows());
  const Vector col_mean = b.colwise().mean();
  for (int c = 0; c < k; ++c) {
    if (den(c) > 0.0) {
      num.row(c) /= den(c);
    } else {
      // Empty-cluster policy: re-seed at the global column mean of b. The
      // caller may add jitter to break symmetry between several empties.
      num.row(c) = col_mean.transpose();
      out.empty_classes.push_back(c);
    }
  }
  out.lambda = MeanParams(std::move(num));
  return out;
}

}  // namespace detail

// lambda_hat_{kl} = (1/n_k(y)) sum_i b_{il} 1{y_i = k}.
inline MeansResult estimate_means(const BlockCompression& b, const HardLabels& y) {
  if (static_cast<std::int64_t>(y.size()) != b.n())
    throw DimensionError("estimate_means: y size != rows of b");
  Matrix num = Matrix::Zero(y.num_classes, b.l());
  Vector den = Vector::Zero(y.num_classes);
  for (std::int64_t i = 0; i < b.n(); ++i) {
    num.row(y.a[static_cast<std::size_t>(i)]) += b.b.row(i);
    den(y.a[static_cast<std::size_t>(i)]) += 1.0;
  }
  return detail::finish_means(std::move(num), std::move(den), b.b);
}

inline MeansResult estimate_means(const BlockCompression& b, const SoftLabels& y) {
  if (static_cast<std::int64_t>(y.size()) != b.n())
    throw DimensionError("estimate_means: y size != rows of b");
  Matrix num = y.w.transpose() * b.b;  // K x L
  Vector den = y.w.colwise().sum();
  return detail::finish_means(std::move(num), std::move(den), b.b);
}

// Multiplicative jitter on re-seeded empty rows, from a dedicated stream.
inline void jitter_empty_rows(MeansResult& mr, std::uint64_t seed, double scale = 0.05) {
  for (int c : mr.empty_classes) {
    Rng r(Rng::derive(seed, static_cast<std::uint64_t>(c)));
    for (int l = 0; l < mr.lambda.l(); ++l)
      mr.lambda.lambda(c, l) *= 1.0 + scale * (r.uniform() - 0.5);
  }
}

// Direct estimator L(A, y, z) of the mean parameters (paper-level identity
// target for estimate_means(block_compress(...))).
inline MeanParams mean_estimator_direct(const BiAdjacency& a, const HardLabels& y,
                                        const HardLabels& z) {
  Matrix num = Matrix::Zero(y.num_classes, z.num_classes);
  Vector den = Vector::Zero(y.num_classes);
  for (std::size_t i = 0; i < y.size(); ++i) den(y.a[i]) += 1.0;
  for (std::int64_t i = 0; i < a.rows(); ++i)
    for (std::size_t p = a.row_begin(i); p < a.row_end(i); ++p)
      num(y.a[static_cast<std::size_t>(i)], z.a[static_cast<std::size_t>(a.col_at(p))]) +=
          a.val_at(p);
  for (int c = 0; c < y.num_classes; ++c)
    if (den(c) > 0.0) num.row(c) /= den(c);
  return MeanParams(std::move(num));
}

// sum_l x_l log(lambda_l / lambda'_l) + lambda'_l - lambda_l.
inline double poisson_llr(const Vector& x, const Vector& lambda, const Vector& lambda_prime) {
  if (x.size() != lambda.size() || x.size() != lambda_prime.size())
    throw DimensionError("poisson_llr: length mismatch");
  double s = 0.0;
  for (Eigen::Index l = 0; l < x.size(); ++l) {
    const double la = std::max(lambda(l), kLambdaFloor);
    const double lb = std::max(lambda_prime(l), kLambdaFloor);
    s += x(l) * std::log(la / lb) + lb - la;
  }
  return s;
}

namespace detail {

// log Phi(b_i, lambda_k) + log prior_k for all k, computed in log space.
inline void posterior_scores(const Matrix& b, Eigen::Index i, const Matrix& log_lambda,
                             const Vector& lambda_row_sums, const Vector& log_pi, Vector& out) {
  const int k = static_cast<int>(log_lambda.rows());
  for (int c = 0; c < k; ++c) {
    double s = log_pi(c) - lambda_row_sums(c);
    for (Eigen::Index l = 0; l < b.cols(); ++l) s += b(i, l) * log_lambda(c, l);
    out(c) = s;
  }
}

inline Matrix clamped_log(const Matrix& lambda) {
  Matrix out(lambda.rows(), lambda.cols());
  for (Eigen::Index i = 0; i < lambda.rows(); ++i)
    for (Eigen::Index j = 0; j < lambda.cols(); ++j)
      out(i, j) = std::log(std::max(lambda(i, j), kLambdaFloor));
  return out;
}

inline Matrix clamped(const Matrix& lambda) {
  return lambda.cwiseMax(kLambdaFloor);
}

}  // namespace detail

// Row class posterior: pi_hat_{ik} ∝ pi_k prod_l phi(b_{il}, lambda_{kl}),
// phi(x, lambda) = exp(x log lambda - lambda). Log-sum-exp normalized.
inline SoftLabels class_posterior(const BlockCompression& b, const MeanParams& lambda_hat,
                                  const ClassPrior& prior, int threads = 1) {
  const int k = lambda_hat.k();
  if (static_cast<int>(prior.pi.size()) != k)
    throw DimensionError("class_posterior: prior length != K");
  if (lambda_hat.l() != b.l()) throw DimensionError("class_posterior: lambda columns != b columns");
  const Matrix lam = detail::clamped(lambda_hat.lambda);
  const Matrix log_lam = detail::clamped_log(lambda_hat.lambda);
  const Vector row_sums = lam.rowwise().sum();
  Vector log_pi(k);
  for (int c = 0; c < k; ++c)
    log_pi(c) = prior.pi(c) > 0.0 ? std::log(prior.pi(c)) : -1e300;
  Matrix w(b.n(), k);
  parallel_for(static_cast<std::size_t>(b.n()), threads, [&](std::size_t i) {
    Vector s(k);
    detail::posterior_scores(b.b, static_cast<Eigen::Index>(i), log_lam, row_sums, log_pi, s);
    const double mx = s.maxCoeff();
    double z = 0.0;
    for (int c = 0; c < k; ++c) z += std::exp(s(c) - mx);
    const double lse = mx + std::log(z);
    for (int c = 0; c < k; ++c) w(static_cast<Eigen::Index>(i), c) = std::exp(s(c) - lse);
  });
  return SoftLabels(std::move(w));
}

// Likelihood ratio classifier: y_hat_i in argmax_r log Phi(b_i(z), lambda_r).
// Ties are broken uniformly at random from the argmax set with a per-node
// stream derived from (seed, i), so classification order does not matter.
inline HardLabels lr_classify(const BiAdjacency& a, const MeanParams& lambda_tilde,
                              const HardLabels& z, std::uint64_t seed = 0, int threads = 1) {
  const BlockCompression b = block_compress(a, z);
  const int k = lambda_tilde.k();
  if (lambda_tilde.l() != b.l()) throw DimensionError("lr_classify: lambda columns != L");
  const Matrix lam = detail::clamped(lambda_tilde.lambda);
  const Matrix log_lam = detail::clamped_log(lambda_tilde.lambda);
  const Vector row_sums = lam.rowwise().sum();
  const Vector log_pi = Vector::Zero(k);
  std::vector<int> out(static_cast<std::size_t>(b.n()));
  parallel_for(static_cast<std::size_t>(b.n()), threads, [&](std::size_t i) {
    Vector s(k);
    detail::posterior_scores(b.b, static_cast<Eigen::Index>(i), log_lam, row_sums, log_pi, s);
    double best = s(0);
    int nties = 1;
    int pick = 0;
    for (int c = 1; c < k; ++c) {
      if (s(c) > best) {
        best = s(c);
        pick = c;
        nties = 1;
      } else if (s(c) == best) {
        ++nties;
      }
    }
    if (nties > 1) {
      Rng r(Rng::derive(seed, static_cast<std::uint64_t>(i)));
      std::uint64_t which = r.uniform_int(static_cast<std::uint64_t>(nties));
      for (int c = 0; c < k; ++c) {
        if (s(c) == best) {
          if (which == 0) {
            pick = c;
            break;
          }
          --which;
        }
      }
    }
    out[i] = pick;
  });
  return HardLabels(std::move(out), k);
}

// Simplified pseudo-likelihood clustering: block-compress with the initial
// column labels, take the flat-prior class posterior at the supplied mean
// parameters, and convert to hard labels by MAP. Equivalent to lr_classify.
inline HardLabels pl_simplified(const BiAdjacency& a, const HardLabels& z0,
                                const MeanParams& lambda_tilde, std::uint64_t seed = 0,
                                int threads = 1) {
  const BlockCompression b = block_compress(a, z0);
  const int k = lambda_tilde.k();
  const Matrix lam = detail::clamped(lambda_tilde.lambda);
  const Matrix log_lam = detail::clamped_log(lambda_tilde.lambda);
  const Vector row_sums = lam.rowwise().sum();
  const Vector log_pi = Vector::Zero(k);  // flat prior
  std::vector<int> out(static_cast<std::size_t>(b.n()));
  parallel_for(static_cast<std::size_t>(b.n()), threads, [&](std::size_t i) {
    Vector s(k);
    detail::posterior_scores(b.b, static_cast<Eigen::Index>(i), log_lam, row_sums, log_pi, s);
    // MAP on the posterior row; argmax of the normalized posterior equals
    // argmax of the log scores, compared here pre-exponentiation so tie
    // patterns match lr_classify exactly.
    double best = s(0);
    std::vector<int> ties{0};
    for (int c = 1; c < k; ++c) {
      if (s(c) > best) {
        best = s(c);
        ties.assign(1, c);
      } else if (s(c) == best) {
        ties.push_back(c);
      }
    }
    if (ties.size() == 1) {
      out[i] = ties[0];
    } else {
      Rng r(Rng::derive(seed, static_cast<std::uint64_t>(i)));
      out[i] = ties[static_cast<std::size_t>(r.uniform_int(ties.size()))];
    }
  });
  return HardLabels(std::move(out), k);
}

enum class PriorMode { kFlat, kEmpirical };
enum class InnerLoop { kOnce, kToConvergence };
enum class Hardening { kKeepSoft, kEachStep, kAtEnd };

struct PLOptions {
  PriorMode prior = PriorMode::kFlat;
  InnerLoop inner = InnerLoop::kOnce;
  Hardening hardening = Hardening::kKeepSoft;
  int max_outer = 50;
  int max_inner = 20;
  double soft_tol = 1e-6;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct PLIterStat {
  int outer = 0;
  int row_changes = 0;
  int col_changes = 0;
  double log_pl = 0.0;
};

struct PLTrace {
  std::vector<PLIterStat> iters;
  bool converged = false;
  int best_iter = -1;
  std::vector<std::string> warnings;
};

struct PLResult {
  SoftLabels y_soft, z_soft;
  HardLabels y, z;  // hardened output
  PLTrace trace;
};

namespace detail {

inline double log_pseudo_likelihood(const BlockCompression& b, const MeanParams& lambda,
                                    const ClassPrior& prior) {
  const int k = lambda.k();
  const Matrix lam = clamped(lambda.lambda);
  const Matrix log_lam = clamped_log(lambda.lambda);
  const Vector row_sums = lam.rowwise().sum();
  Vector log_pi(k);
  double norm = prior.pi.sum();
  for (int c = 0; c < k; ++c)
    log_pi(c) = prior.pi(c) > 0.0 ? std::log(prior.pi(c) / norm) : -1e300;
  double total = 0.0;
  Vector s(k);
  for (Eigen::Index i = 0; i < b.n(); ++i) {
    posterior_scores(b.b, i, log_lam, row_sums, log_pi, s);
    const double mx = s.maxCoeff();
    double z = 0.0;
    for (int c = 0; c < k; ++c) z += std::exp(s(c) - mx);
    total += mx + std::log(z);
  }
  return total;
}

}  // namespace detail

// Pseudo-likelihood biclustering meta algorithm: alternating row and column
// EM-style updates built from block_compress / estimate_means /
// class_posterior, in the six-variant space selected by PLOptions.
inline PLResult pl_meta(const BiAdjacency& a, const HardLabels& y0, const HardLabels& z0,
                        const PLOptions& opts) {
  if (static_cast<std::int64_t>(y0.size()) != a.rows() ||
      static_cast<std::int64_t>(z0.size()) != a.cols())
    throw DimensionError("pl_meta: initial label sizes do not match A");
  const BiAdjacency at = a.transpose();
  const int k = y0.num_classes;
  const int l = z0.num_classes;

  SoftLabels ys = one_hot(y0);
  SoftLabels zs = one_hot(z0);
  HardLabels yh = y0;
  HardLabels zh = z0;

  PLResult res;
  res.trace.converged = false;
  double best_lpl = -std::numeric_limits<double>::infinity();

  // One half-update (rows given columns, or the transpose analogue).
  auto side_update = [&](const BiAdjacency& mat, SoftLabels& labels, const SoftLabels& other,
                         int classes, std::uint64_t tag, int outer, double* lpl_out) {
    BlockCompression b = block_compress(mat, other);
    SoftLabels cur = labels;
    const int inner_max = opts.inner == InnerLoop::kOnce ? 1 : opts.max_inner;
    ClassPrior prior = ClassPrior::flat_prior(classes);
    MeansResult mr;
    for (int it = 0; it < inner_max; ++it) {
      mr = estimate_means(b, cur);
      if (!mr.empty_classes.empty()) {
        jitter_empty_rows(mr, Rng::derive(opts.seed, {900, tag, static_cast<std::uint64_t>(outer),
                                                      static_cast<std::uint64_t>(it)}));
        res.trace.warnings.push_back("empty class re-seeded during EM");
      }
      if (opts.prior == PriorMode::kEmpirical) prior = ClassPrior::empirical(cur);
      SoftLabels next = class_posterior(b, mr.lambda, prior, opts.threads);
      if (opts.hardening == Hardening::kEachStep)
        next = one_hot(harden(next, Rng::derive(opts.seed, {901, tag, static_cast<std::uint64_t>(outer),
                                                            static_cast<std::uint64_t>(it)})));
      const double move = (next.w - cur.w).cwiseAbs().maxCoeff();
      cur = std::move(next);
      if (move < opts.soft_tol) break;
    }
    if (lpl_out) *lpl_out = detail::log_pseudo_likelihood(b, mr.lambda, prior);
    labels = std::move(cur);
  };

  for (int outer = 1; outer <= opts.max_outer; ++outer) {
    const SoftLabels prev_y = ys;
    const SoftLabels prev_z = zs;
    double lpl_row = 0.0, lpl_col = 0.0;

    side_update(a, ys, zs, k, 1, outer, &lpl_row);
    side_update(at, zs, ys, l, 2, outer, &lpl_col);

    if (opts.hardening == Hardening::kAtEnd) {
      ys = one_hot(harden(ys, Rng::derive(opts.seed, {902, static_cast<std::uint64_t>(outer)})));
      zs = one_hot(harden(zs, Rng::derive(opts.seed, {903, static_cast<std::uint64_t>(outer)})));
    }

    HardLabels new_yh = harden(ys, Rng::derive(opts.seed, {904, static_cast<std::uint64_t>(outer)}));
    HardLabels new_zh = harden(zs, Rng::derive(opts.seed, {905, static_cast<std::uint64_t>(outer)}));

    PLIterStat st;
    st.outer = outer;
    for (std::size_t i = 0; i < yh.size(); ++i) st.row_changes += (new_yh.a[i] != yh.a[i]);
    for (std::size_t j = 0; j < zh.size(); ++j) st.col_changes += (new_zh.a[j] != zh.a[j]);
    st.log_pl = lpl_row + lpl_col;
    res.trace.iters.push_back(st);

    const bool hard_fixed = (st.row_changes == 0 && st.col_changes == 0);
    const double soft_move = std::max((ys.w - prev_y.w).cwiseAbs().maxCoeff(),
                                      (zs.w - prev_z.w).cwiseAbs().maxCoeff());
    yh = std::move(new_yh);
    zh = std::move(new_zh);

    if (st.log_pl >= best_lpl) {
      best_lpl = st.log_pl;
      res.trace.best_iter = outer;
      res.y_soft = ys;
      res.z_soft = zs;
      res.y = yh;
      res.z = zh;
    }

    if (hard_fixed || soft_move < opts.soft_tol) {
      res.trace.converged = true;
      res.y_soft = ys;
      res.z_soft = zs;
      res.y = yh;
      res.z = zh;
      break;
    }
  }
  if (!res.trace.converged)
    res.trace.warnings.push_back("pl_meta: no convergence within max_outer; best iterate returned");
  return res;
}

}  // namespace bisbm
