#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "bisbm/adjacency.hpp"
#include "bisbm/common.hpp"
#include "bisbm/kmeans.hpp"
#include "bisbm/labels.hpp"
#include "bisbm/rng.hpp"

namespace bisbm {

struct SpectralConfig {
  int rank = 0;  // 0 -> K ^ L at the call site
  double regularization_quantile = 0.9;
  int kmeans_restarts = 10;
  int kmeans_max_iter = 100;
  double kappa_target = 0.0;  // informational approximation-quality note
  std::uint64_t seed = 0;
  double svd_tol = 1e-8;
  int svd_max_iter = 1000;
  int threads = 1;
};

namespace detail {

inline double nearest_rank_quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t idx = std::min(
      v.size() - 1,
      static_cast<std::size_t>(std::max(0.0, std::ceil(q * static_cast<double>(v.size())) - 1.0)));
  return v[idx];
}

}  // namespace detail

// Degree-reduction regularization: rows (then columns) whose l1 mass exceeds
// tau = max(q-quantile of masses, 2 * average mass) are scaled down so their
// mass equals tau. Never increases any row's l1 mass.
inline BiAdjacency regularize_degrees(const BiAdjacency& a, const SpectralConfig& cfg) {
  const std::int64_t n = a.rows(), m = a.cols();
  std::vector<double> rdeg(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) rdeg[static_cast<std::size_t>(i)] = a.row_mass(i);
  double avg = 0.0;
  for (double v : rdeg) avg += v;
  avg = n > 0 ? avg / static_cast<double>(n) : 0.0;
  const double tau_r =
      std::max(detail::nearest_rank_quantile(rdeg, cfg.regularization_quantile), 2.0 * avg);
  std::vector<double> rs(static_cast<std::size_t>(n), 1.0);
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = rdeg[static_cast<std::size_t>(i)];
    if (d > tau_r && tau_r > 0.0) rs[static_cast<std::size_t>(i)] = tau_r / d;
  }
  // Column masses of the row-scaled matrix.
  std::vector<double> cdeg(static_cast<std::size_t>(m), 0.0);
  for (std::int64_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::size_t p = a.colv_begin(j); p < a.colv_end(j); ++p)
      s += a.cval_at(p) * rs[static_cast<std::size_t>(a.row_at(p))];
    cdeg[static_cast<std::size_t>(j)] = s;
  }
  double cavg = 0.0;
  for (double v : cdeg) cavg += v;
  cavg = m > 0 ? cavg / static_cast<double>(m) : 0.0;
  const double tau_c =
      std::max(detail::nearest_rank_quantile(cdeg, cfg.regularization_quantile), 2.0 * cavg);
  std::vector<double> cs(static_cast<std::size_t>(m), 1.0);
  for (std::int64_t j = 0; j < m; ++j) {
    const double d = cdeg[static_cast<std::size_t>(j)];
    if (d > tau_c && tau_c > 0.0) cs[static_cast<std::size_t>(j)] = tau_c / d;
  }
  bool any = false;
  for (double v : rs)
    if (v != 1.0) any = true;
  for (double v : cs)
    if (v != 1.0) any = true;
  if (!any) return a;
  return a.scaled(rs, cs);
}

struct SvdResult {
  Matrix u;  // n x r
  Vector s;  // r singular values, nonincreasing
  Matrix v;  // m x r
  int iterations = 0;
  double residual = 0.0;
};

namespace detail {

inline Matrix spmm(const BiAdjacency& a, const Matrix& x) {
  Matrix y = Matrix::Zero(a.rows(), x.cols());
  for (std::int64_t i = 0; i < a.rows(); ++i)
    for (std::size_t p = a.row_begin(i); p < a.row_end(i); ++p)
      y.row(i) += a.val_at(p) * x.row(a.col_at(p));
  return y;
}

inline Matrix spmm_t(const BiAdjacency& a, const Matrix& x) {
  Matrix y = Matrix::Zero(a.cols(), x.cols());
  for (std::int64_t j = 0; j < a.cols(); ++j)
    for (std::size_t p = a.colv_begin(j); p < a.colv_end(j); ++p)
      y.row(j) += a.cval_at(p) * x.row(a.row_at(p));
  return y;
}

inline Vector spmv(const BiAdjacency& a, const Vector& x) {
  Vector y = Vector::Zero(a.rows());
  for (std::int64_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t p = a.row_begin(i); p < a.row_end(i); ++p) s += a.val_at(p) * x(a.col_at(p));
    y(i) = s;
  }
  return y;
}

inline Vector spmv_t(const BiAdjacency& a, const Vector& x) {
  Vector y = Vector::Zero(a.cols());
  for (std::int64_t j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (std::size_t p = a.colv_begin(j); p < a.colv_end(j); ++p) s += a.cval_at(p) * x(a.row_at(p));
    y(j) = s;
  }
  return y;
}

// Orthogonalize x against the first `cols` columns of basis, twice.
inline void reorthogonalize(const Matrix& basis, int cols, Vector& x) {
  for (int pass = 0; pass < 2; ++pass)
    for (int c = 0; c < cols; ++c) x -= basis.col(c).dot(x) * basis.col(c);
}

}  // namespace detail

// Top-rank singular triplets of a sparse matrix via Golub-Kahan-Lanczos
// bidiagonalization with full reorthogonalization; converged when every
// kept triplet satisfies both residual identities to relative tolerance.
// Works on the sparse matrix only; no dense factorization of A.
inline SvdResult truncated_svd(const BiAdjacency& a, int rank, std::uint64_t seed,
                               double tol = 1e-8, int max_iter = 1000) {
  const std::int64_t n = a.rows(), m = a.cols();
  if (rank < 1 || rank > std::min(n, m))
    throw DimensionError("truncated_svd: rank out of range");
  SvdResult res;
  if (a.nnz() == 0) {
    res.u = Matrix::Identity(n, rank);
    res.s = Vector::Zero(rank);
    res.v = Matrix::Identity(m, rank);
    return res;
  }
  const int dmax = static_cast<int>(std::min<std::int64_t>(
      std::min(n, m), std::min(max_iter, std::max(6 * rank + 40, 120))));
  Matrix vbasis(m, dmax), ubasis(n, dmax);
  Vector alpha = Vector::Zero(dmax), beta = Vector::Zero(dmax);
  Rng rng(Rng::derive(seed, 0x5fd1));

  auto fresh_v = [&](int have) {
    Vector v(m);
    for (;;) {
      for (std::int64_t j = 0; j < m; ++j) v(j) = rng.normal();
      detail::reorthogonalize(vbasis, have, v);
      const double nrm = v.norm();
      if (nrm > 1e-8) return Vector((v / nrm).eval());
    }
  };

  Vector v = fresh_v(0);
  double achieved = std::numeric_limits<double>::infinity();
  int ub = 0;  // completed left Lanczos vectors
  int vb = 0;  // completed right Lanczos vectors (vb == ub or ub + 1)
  double scale = 0.0;  // running estimate of ||A||_2 via alpha/beta magnitudes
  bool exhausted = false;

  // Ritz triplets from the (possibly rectangular) bidiagonal projection
  // A V_vb = U_ub B; finishes, zero-padding past the true rank with
  // residual-checked orthonormal complements, once every kept triplet meets
  // the tolerance.
  auto try_finish = [&](bool force) -> bool {
    const int have = std::min(rank, ub);
    Matrix ur, vr;
    Vector sr;
    double worst = 0.0;
    if (have > 0) {
      Matrix bd = Matrix::Zero(ub, vb);
      for (int i = 0; i < ub; ++i) {
        bd(i, i) = alpha(i);
        if (i + 1 < vb) bd(i, i + 1) = beta(i);
      }
      Eigen::JacobiSVD<Matrix> svd(bd, Eigen::ComputeThinU | Eigen::ComputeThinV);
      ur = ubasis.leftCols(ub) * svd.matrixU().leftCols(have);
      vr = vbasis.leftCols(vb) * svd.matrixV().leftCols(have);
      sr = svd.singularValues().head(have);
      const double top = std::max(sr(0), 1e-300);
      for (int i = 0; i < have; ++i) {
        const double r1 = (detail::spmv(a, vr.col(i)) - sr(i) * ur.col(i)).norm();
        const double r2 = (detail::spmv_t(a, ur.col(i)) - sr(i) * vr.col(i)).norm();
        worst = std::max({worst, r1 / top, r2 / top});
      }
    }
    achieved = worst;
    if (worst > tol) return false;
    if (have < rank && !force) return false;
    Matrix up(n, rank), vp(m, rank);
    Vector sp = Vector::Zero(rank);
    if (have > 0) {
      up.leftCols(have) = ur;
      vp.leftCols(have) = vr;
      sp.head(have) = sr;
    }
    const double top = std::max(have > 0 ? sr(0) : 0.0, 1e-300);
    for (int c = have; c < rank; ++c) {
      Vector x(n);
      do {
        for (std::int64_t i = 0; i < n; ++i) x(i) = rng.normal();
        detail::reorthogonalize(up, c, x);
      } while (x.norm() <= 1e-8);
      up.col(c) = x / x.norm();
      Vector y(m);
      do {
        for (std::int64_t i = 0; i < m; ++i) y(i) = rng.normal();
        detail::reorthogonalize(vp, c, y);
      } while (y.norm() <= 1e-8);
      vp.col(c) = y / y.norm();
      // A padded triplet claims singular value zero; verify it.
      const double rz = std::max(detail::spmv(a, vp.col(c)).norm(),
                                 detail::spmv_t(a, up.col(c)).norm()) /
                        top;
      if (rz > tol) {
        achieved = std::max(achieved, rz);
        return false;
      }
    }
    res.u = std::move(up);
    res.s = std::move(sp);
    res.v = std::move(vp);
    res.residual = achieved;
    return true;
  };

  for (int j = 0; j < dmax; ++j) {
    res.iterations = j + 1;
    vbasis.col(j) = v;
    vb = j + 1;
    Vector u = detail::spmv(a, v);
    if (j > 0) u -= beta(j - 1) * ubasis.col(j - 1);
    detail::reorthogonalize(ubasis, j, u);
    alpha(j) = u.norm();
    scale = std::max({scale, alpha(j), j > 0 ? beta(j - 1) : 0.0});
    if (alpha(j) <= 1e-13 * std::max(scale, 1.0)) {
      // Left side exhausted: A v_j lies in the span already found.
      alpha(j) = 0.0;
      exhausted = true;
      break;
    }
    ubasis.col(j) = u / alpha(j);
    ub = j + 1;

    Vector vn = detail::spmv_t(a, ubasis.col(j)) - alpha(j) * v;
    detail::reorthogonalize(vbasis, j + 1, vn);
    beta(j) = vn.norm();
    if (beta(j) <= 1e-13 * std::max(scale, 1.0)) {
      beta(j) = 0.0;
      if (ub < rank && j + 1 < dmax) {
        // Invariant pair found; restart with a fresh orthogonal vector.
        v = fresh_v(j + 1);
        continue;
      }
      exhausted = true;
    } else {
      v = vn / beta(j);
    }

    if (ub >= rank || exhausted) {
      if (try_finish(exhausted)) return res;
      if (exhausted) break;
    }
  }
  if (try_finish(true)) return res;
  throw NumericalError("truncated_svd: no convergence within the basis cap; achieved relative "
                       "residual " +
                       std::to_string(achieved));
}

// SC-RRE: degree regularization, rank-(K^L) truncated SVD, k-means++ on the
// scaled singular-vector matrix U * diag(S) (not on U alone).
inline HardLabels spectral_cluster_rows(const BiAdjacency& a, int k, int l,
                                        const SpectralConfig& cfg) {
  const int rank = static_cast<int>(
      std::min<std::int64_t>(cfg.rank > 0 ? cfg.rank : std::min(k, l), std::min(a.rows(), a.cols())));
  const BiAdjacency a_re = regularize_degrees(a, cfg);
  const SvdResult svd = truncated_svd(a_re, rank, Rng::derive(cfg.seed, 0xabc1), cfg.svd_tol,
                                      cfg.svd_max_iter);
  const Matrix x = svd.u * svd.s.asDiagonal();
  KMeansResult km = kmeans(x, k, cfg.kmeans_restarts, cfg.kmeans_max_iter,
                           Rng::derive(cfg.seed, 0xabc2), cfg.threads);
  return HardLabels(std::move(km.labels), k);
}

// Column dual: colSC(A) = rowSC(A^T).
inline HardLabels spectral_cluster_cols(const BiAdjacency& a, int k, int l,
                                        const SpectralConfig& cfg) {
  return spectral_cluster_rows(a.transpose(), l, k, cfg);
}

}  // namespace bisbm
