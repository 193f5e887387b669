#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "bisbm/common.hpp"
#include "bisbm/model.hpp"
#include "bisbm/parallel.hpp"

namespace bisbm {

// Pairwise Chernoff exponents I_kr between rows of a mean-parameter matrix,
// with the optimizing s in (0,1) for each pair.
struct InfoMatrix {
  Matrix i_kr;    // K x K, symmetric, zero diagonal
  Matrix s_star;  // optimizers; 0.5 by convention for identical rows
  double i_min = 0.0;  // min over k != r (0 when K = 1)
};

// eps_kr = max_l (lambda_kl/lambda_rl v lambda_rl/lambda_kl) - 1.
struct SeparationMatrix {
  Matrix eps_kr;
  Vector eps_k;  // min over r != k (infinity when K = 1)
  double eps = 0.0;
};

namespace detail {

// I_s = sum_l (1-s) a_l + s b_l - a_l^{1-s} b_l^s for one row pair, using
// cached logs: a^{1-s} b^s = exp((1-s) log a + s log b).
struct PairInfo {
  Vector a, b, log_a, log_b;

  double value(double s) const {
    double v = 0.0;
    for (Eigen::Index l = 0; l < a.size(); ++l)
      v += (1.0 - s) * a(l) + s * b(l) - std::exp((1.0 - s) * log_a(l) + s * log_b(l));
    return v;
  }

  // d I_s / ds = sum_l (b_l - a_l) - a^{1-s} b^s log(b_l / a_l).
  double deriv(double s) const {
    double v = 0.0;
    for (Eigen::Index l = 0; l < a.size(); ++l)
      v += (b(l) - a(l)) -
           std::exp((1.0 - s) * log_a(l) + s * log_b(l)) * (log_b(l) - log_a(l));
    return v;
  }
};

// Maximize the strictly concave I_s over (0,1): bisection on the decreasing
// derivative, with a golden-section fallback when the derivative is
// numerically flat at both ends.
inline std::pair<double, double> maximize_pair(const PairInfo& pi, double s_tol) {
  double lo = 0.0, hi = 1.0;
  const double dlo = pi.deriv(1e-12);
  const double dhi = pi.deriv(1.0 - 1e-12);
  if (dlo <= 0.0 && dhi >= 0.0) {
    // Flat map (identical rows up to rounding); convention s* = 0.5.
    return {std::max(pi.value(0.5), 0.0), 0.5};
  }
  if (dlo <= 0.0) return {std::max(pi.value(s_tol), 0.0), s_tol};
  if (dhi >= 0.0) return {std::max(pi.value(1.0 - s_tol), 0.0), 1.0 - s_tol};
  while (hi - lo > s_tol) {
    const double mid = 0.5 * (lo + hi);
    const double d = pi.deriv(mid);
    if (d > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double s = 0.5 * (lo + hi);
  // Golden-section refinement in the residual bracket guards against a
  // derivative that lost precision near the optimum.
  const double inv_phi = 0.6180339887498949;
  double a = std::max(s - 8.0 * s_tol, 1e-12), b = std::min(s + 8.0 * s_tol, 1.0 - 1e-12);
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  double f1 = pi.value(x1), f2 = pi.value(x2);
  for (int it = 0; it < 60 && (b - a) > s_tol * 0.25; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = pi.value(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = pi.value(x1);
    }
  }
  const double sb = 0.5 * (a + b);
  const double vb = pi.value(sb);
  const double vs = pi.value(s);
  return vb > vs ? std::make_pair(std::max(vb, 0.0), sb) : std::make_pair(std::max(vs, 0.0), s);
}

inline bool rows_identical(const Matrix& lam, int k, int r, double rel_tol) {
  for (Eigen::Index l = 0; l < lam.cols(); ++l) {
    const double scale = std::max(std::abs(lam(k, l)), std::abs(lam(r, l)));
    if (std::abs(lam(k, l) - lam(r, l)) > rel_tol * std::max(scale, 1e-300)) return false;
  }
  return true;
}

}  // namespace detail

inline InfoMatrix chernoff_info(const MeanParams& lambda, double s_tol = 1e-10, int threads = 1) {
  const int k = lambda.k();
  const Matrix lam = lambda.lambda.cwiseMax(kLambdaFloor);
  InfoMatrix out;
  out.i_kr = Matrix::Zero(k, k);
  out.s_star = Matrix::Constant(k, k, 0.5);
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) pairs.emplace_back(a, b);
  std::vector<std::pair<double, double>> results(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t t) {
    const auto [a, b] = pairs[t];
    if (detail::rows_identical(lam, a, b, 1e-12)) {
      results[t] = {0.0, 0.5};
      return;
    }
    detail::PairInfo pi;
    pi.a = lam.row(a).transpose();
    pi.b = lam.row(b).transpose();
    pi.log_a = pi.a.array().log();
    pi.log_b = pi.b.array().log();
    results[t] = detail::maximize_pair(pi, s_tol);
  });
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    const auto [a, b] = pairs[t];
    out.i_kr(a, b) = out.i_kr(b, a) = results[t].first;
    out.s_star(a, b) = results[t].second;
    out.s_star(b, a) = 1.0 - results[t].second;
  }
  out.i_min = std::numeric_limits<double>::infinity();
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      if (a != b) out.i_min = std::min(out.i_min, out.i_kr(a, b));
  if (k == 1) out.i_min = 0.0;
  return out;
}

// Column information: chernoff_info applied to the rows of Gamma.
inline InfoMatrix column_info(const MeanParams& gamma, double s_tol = 1e-10, int threads = 1) {
  return chernoff_info(gamma, s_tol, threads);
}

inline SeparationMatrix separation(const MeanParams& lambda) {
  const int k = lambda.k();
  const Matrix lam = lambda.lambda.cwiseMax(kLambdaFloor);
  SeparationMatrix out;
  out.eps_kr = Matrix::Zero(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      if (a == b) continue;
      double mx = 1.0;
      for (Eigen::Index l = 0; l < lam.cols(); ++l)
        mx = std::max({mx, lam(a, l) / lam(b, l), lam(b, l) / lam(a, l)});
      out.eps_kr(a, b) = mx - 1.0;
    }
  const double inf = std::numeric_limits<double>::infinity();
  out.eps_k = Vector::Constant(k, inf);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      if (a != b) out.eps_k(a) = std::min(out.eps_k(a), out.eps_kr(a, b));
  out.eps = k > 1 ? out.eps_k.minCoeff() : inf;
  return out;
}

// Oracle-rate overlay: sum_{r != k} exp(-I_kr - 0.5 log Lambda_min).
// Constants and the zeta slack are dropped; order-of-magnitude guide only,
// not a bound. The optional factor restores the (1 + 1/eps_kr) term.
inline double rate_prediction(const InfoMatrix& info, double lambda_min, int k,
                              const SeparationMatrix* eps = nullptr,
                              bool include_eps_factor = false) {
  const int kk = static_cast<int>(info.i_kr.rows());
  const double half_log = 0.5 * std::log(std::max(lambda_min, kLambdaFloor));
  double s = 0.0;
  for (int r = 0; r < kk; ++r) {
    if (r == k) continue;
    double term = std::exp(-info.i_kr(k, r) - half_log);
    if (include_eps_factor && eps != nullptr && eps->eps_kr(k, r) > 0.0)
      term *= 1.0 + 1.0 / eps->eps_kr(k, r);
    s += term;
  }
  return s;
}

}  // namespace bisbm
