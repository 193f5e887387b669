#include <catch_amalgamated.hpp>

#include <cmath>

#include "bisbm/info.hpp"
#include "bisbm/rng.hpp"

using namespace bisbm;

namespace {

// Grid-search oracle for sup_{s in (0,1)} I_s (uniform grid of `points`).
double grid_info(const Vector& a, const Vector& b, int points) {
  double best = 0.0;
  for (int i = 1; i <= points; ++i) {
    const double s = static_cast<double>(i) / (points + 1);
    double v = 0.0;
    for (Eigen::Index l = 0; l < a.size(); ++l)
      v += (1 - s) * a(l) + s * b(l) - std::pow(a(l), 1 - s) * std::pow(b(l), s);
    best = std::max(best, v);
  }
  return best;
}

MeanParams random_lambda(int k, int l, Rng& r, double lo = 0.2, double hi = 8.0) {
  Matrix m(k, l);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < l; ++b) m(a, b) = lo + (hi - lo) * r.uniform();
  return MeanParams(std::move(m));
}

}  // namespace

TEST_CASE("chernoff_info closed-form cases") {
  // Identical rows -> zero information, s* reported as 1/2.
  const MeanParams same(Matrix::Constant(2, 3, 1.7));
  const InfoMatrix i0 = chernoff_info(same);
  REQUIRE(i0.i_kr(0, 1) == 0.0);
  REQUIRE(i0.s_star(0, 1) == 0.5);

  // Symmetric pair: s* = 1/2, I = (1/2) sum (sqrt(l_k) - sqrt(l_r))^2 = 1.
  Matrix lm(2, 2);
  lm << 4, 1, 1, 4;
  const InfoMatrix im = chernoff_info(MeanParams(lm));
  REQUIRE(im.s_star(0, 1) == Catch::Approx(0.5).margin(1e-9));
  REQUIRE(im.i_kr(0, 1) == Catch::Approx(1.0).epsilon(1e-10));
  REQUIRE(im.i_min == Catch::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("chernoff_info agrees with a dense grid search") {
  Rng r(601);
  for (int trial = 0; trial < 8; ++trial) {
    const MeanParams lam = random_lambda(2, 5, r);
    const InfoMatrix im = chernoff_info(lam);
    const double oracle = grid_info(lam.lambda.row(0).transpose(), lam.lambda.row(1).transpose(),
                                    1000000);
    REQUIRE(im.i_kr(0, 1) == Catch::Approx(oracle).margin(1e-8));
  }
}

TEST_CASE("chernoff_info invariants") {
  Rng r(602);
  for (int trial = 0; trial < 25; ++trial) {
    const int k = 2 + static_cast<int>(r.uniform_int(2));
    const int l = 2 + static_cast<int>(r.uniform_int(3));
    const MeanParams lam = random_lambda(k, l, r);
    const InfoMatrix im = chernoff_info(lam);

    for (int a = 0; a < k; ++a) {
      REQUIRE(im.i_kr(a, a) == 0.0);
      for (int b = 0; b < k; ++b) {
        // Exact symmetry and the general upper bound I <= 2 L ||Lambda||_inf.
        REQUIRE(im.i_kr(a, b) == im.i_kr(b, a));
        REQUIRE(im.i_kr(a, b) <= 2.0 * l * lam.max() + 1e-12);
        if (a == b) continue;
        // s = 1/2 lower bound.
        double half = 0.0;
        for (int c = 0; c < l; ++c)
          half += 0.5 * std::pow(std::sqrt(lam.lambda(a, c)) - std::sqrt(lam.lambda(b, c)), 2);
        REQUIRE(im.i_kr(a, b) >= half - 1e-10);
        // l2 link: sum (lambda_r - lambda_k)^2 >= 2 Lambda_min I_kr.
        double l2 = 0.0;
        for (int c = 0; c < l; ++c)
          l2 += std::pow(lam.lambda(a, c) - lam.lambda(b, c), 2);
        REQUIRE(l2 >= 2.0 * lam.min() * im.i_kr(a, b) - 1e-9);
        // s* within [1/(2w), 1 - 1/(2w)] for the pairwise ratio bound w.
        double w = 1.0;
        for (int c = 0; c < l; ++c)
          w = std::max({w, lam.lambda(a, c) / lam.lambda(b, c),
                        lam.lambda(b, c) / lam.lambda(a, c)});
        REQUIRE(im.s_star(a, b) >= 1.0 / (2.0 * w) - 1e-9);
        REQUIRE(im.s_star(a, b) <= 1.0 - 1.0 / (2.0 * w) + 1e-9);
      }
    }

    // 1-homogeneity in Lambda.
    const double c = 0.3 + 3.0 * r.uniform();
    const InfoMatrix scaled = chernoff_info(MeanParams(c * lam.lambda));
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        REQUIRE(scaled.i_kr(a, b) == Catch::Approx(c * im.i_kr(a, b)).margin(1e-8));
  }
}

TEST_CASE("column_info mirrors chernoff_info on Gamma") {
  Rng r(603);
  const MeanParams gamma = random_lambda(3, 2, r);
  const InfoMatrix ic = column_info(gamma);
  const InfoMatrix ir = chernoff_info(gamma);
  REQUIRE(ic.i_kr == ir.i_kr);

  const MeanParams same(Matrix::Constant(2, 4, 0.9));
  REQUIRE(column_info(same).i_kr(0, 1) == 0.0);

  Matrix g(2, 2);
  g << 9, 1, 1, 9;
  const InfoMatrix sym = column_info(MeanParams(g));
  REQUIRE(sym.s_star(0, 1) == Catch::Approx(0.5).margin(1e-9));
  REQUIRE(sym.i_kr(0, 1) == Catch::Approx(0.5 * 2 * std::pow(3.0 - 1.0, 2)).epsilon(1e-9));
}

TEST_CASE("separation matrix and its information lower bound") {
  const MeanParams same(Matrix::Constant(2, 3, 2.2));
  REQUIRE(separation(same).eps_kr(0, 1) == 0.0);

  Matrix lm(2, 2);
  lm << 4, 1, 1, 4;
  const SeparationMatrix sep = separation(MeanParams(lm));
  REQUIRE(sep.eps_kr(0, 1) == Catch::Approx(3.0));
  REQUIRE(sep.eps == Catch::Approx(3.0));

  // eps_kr >= min(2 I_kr / (L ||Lambda||_inf), 2) on random instances.
  Rng r(604);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 2 + static_cast<int>(r.uniform_int(2));
    const int l = 2 + static_cast<int>(r.uniform_int(3));
    const MeanParams lam = random_lambda(k, l, r);
    const InfoMatrix im = chernoff_info(lam);
    const SeparationMatrix sp = separation(lam);
    const double denom = static_cast<double>(l) * lam.max();
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) {
        if (a == b) continue;
        REQUIRE(sp.eps_kr(a, b) >= std::min(2.0 * im.i_kr(a, b) / denom, 2.0) - 1e-9);
      }
  }
}

TEST_CASE("rate_prediction closed forms") {
  InfoMatrix im;
  im.i_kr = Matrix::Zero(2, 2);
  im.i_kr(0, 1) = im.i_kr(1, 0) = std::numeric_limits<double>::infinity();
  REQUIRE(rate_prediction(im, 1.0, 0) == 0.0);

  im.i_kr(0, 1) = im.i_kr(1, 0) = 1.0;
  REQUIRE(rate_prediction(im, 1.0, 0) == Catch::Approx(std::exp(-1.0)).epsilon(1e-12));

  // Optional (1 + 1/eps) factor.
  SeparationMatrix sep;
  sep.eps_kr = Matrix::Zero(2, 2);
  sep.eps_kr(0, 1) = sep.eps_kr(1, 0) = 3.0;
  REQUIRE(rate_prediction(im, 1.0, 0, &sep, true) ==
          Catch::Approx((1.0 + 1.0 / 3.0) * std::exp(-1.0)).epsilon(1e-12));
}
