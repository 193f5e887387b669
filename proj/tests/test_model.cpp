#include <catch_amalgamated.hpp>

#include "bisbm/info.hpp"
#include "bisbm/model.hpp"
#include "bisbm/parallel.hpp"

using namespace bisbm;

namespace {

Connectivity planted_partition(int k, double n, double a, double b) {
  Matrix p = Matrix::Constant(k, k, b / n);
  for (int i = 0; i < k; ++i) p(i, i) = a / n;
  return Connectivity(std::move(p));
}

}  // namespace

TEST_CASE("true_mean_params direct products") {
  Matrix p(2, 2);
  p << 0.5, 0.1, 0.1, 0.5;
  const HardLabels z({0, 0, 1, 1}, 2);
  const MeanParams lam = true_mean_params(Connectivity(p), z);
  REQUIRE(lam.lambda(0, 0) == 1.0);
  REQUIRE(lam.lambda(0, 1) == 0.2);
  REQUIRE(lam.lambda(1, 0) == 0.2);
  REQUIRE(lam.lambda(1, 1) == 1.0);

  const MeanParams zero = true_mean_params(Connectivity(Matrix::Zero(2, 2)), z);
  REQUIRE(zero.lambda.isZero());

  // Planted partition, n = 20, K = 2, a = 4, b = 1, balanced z.
  const Connectivity pp = planted_partition(2, 20.0, 4.0, 1.0);
  const HardLabels zb = balanced_labels(20, 2);
  const MeanParams lpp = true_mean_params(pp, zb);
  REQUIRE(lpp.lambda(0, 0) == Catch::Approx(2.0));
  REQUIRE(lpp.lambda(1, 1) == Catch::Approx(2.0));
  REQUIRE(lpp.lambda(0, 1) == Catch::Approx(0.5));
  REQUIRE(lpp.lambda(1, 0) == Catch::Approx(0.5));

  REQUIRE_THROWS_AS(true_mean_params(pp, HardLabels({0, 1, 2}, 3)), DimensionError);
}

TEST_CASE("sample_sbm determinism and degenerate cases") {
  const Connectivity p = planted_partition(2, 40.0, 8.0, 2.0);
  const HardLabels y = balanced_labels(40, 2);
  const HardLabels z = balanced_labels(40, 2);
  const BiAdjacency a1 = sample_sbm(p, y, z, 7, SbmMode::Bernoulli);
  const BiAdjacency a2 = sample_sbm(p, y, z, 7, SbmMode::Bernoulli, 2);
  REQUIRE(a1.entries() == a2.entries());  // thread count does not matter
  const BiAdjacency a3 = sample_sbm(p, y, z, 8, SbmMode::Bernoulli);
  REQUIRE(a1.entries() != a3.entries());

  const BiAdjacency empty =
      sample_sbm(Connectivity(Matrix::Zero(2, 2)), y, z, 1, SbmMode::Bernoulli);
  REQUIRE(empty.nnz() == 0);

  const BiAdjacency full =
      sample_sbm(Connectivity(Matrix::Ones(2, 2)), y, z, 1, SbmMode::Bernoulli);
  REQUIRE(full.nnz() == 40 * 40);
}

TEST_CASE("sampled block means are unbiased (Monte Carlo, 3 sigma)") {
  const int n = 2000, m = 2000, seeds = 50;
  const double p = 0.01;
  const Connectivity conn(Matrix::Constant(2, 2, p));
  const HardLabels y = balanced_labels(n, 2);
  const HardLabels z = balanced_labels(m, 2);
  Matrix sums = Matrix::Zero(2, 2);
  for (int s = 0; s < seeds; ++s) {
    const BiAdjacency a = sample_sbm(conn, y, z, 1000 + s, SbmMode::Bernoulli, 2);
    Matrix block = Matrix::Zero(2, 2);
    for (const auto& [i, j, v] : a.entries())
      block(y.a[static_cast<std::size_t>(i)], z.a[static_cast<std::size_t>(j)]) += v;
    sums += block / (static_cast<double>(n) * m / 4.0);
  }
  const double se = std::sqrt(p * (1 - p) / (static_cast<double>(n) * m / 4.0 * seeds));
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) REQUIRE(std::abs(sums(a, b) / seeds - p) < 3 * se);
}

TEST_CASE("poisson and bernoulli modes agree in expectation") {
  const int n = 600, m = 600, seeds = 24;
  const Connectivity conn(Matrix::Constant(2, 2, 0.02));
  const HardLabels y = balanced_labels(n, 2);
  const HardLabels z = balanced_labels(m, 2);
  double bern = 0.0, pois = 0.0;
  for (int s = 0; s < seeds; ++s) {
    bern += sample_sbm(conn, y, z, 50 + s, SbmMode::Bernoulli, 2).total_mass();
    pois += sample_sbm(conn, y, z, 90 + s, SbmMode::Poisson, 2).total_mass();
  }
  const double expect = 0.02 * n * m;
  const double tol = 4.0 * std::sqrt(expect / seeds);
  REQUIRE(std::abs(bern / seeds - expect) < tol);
  REQUIRE(std::abs(pois / seeds - expect) < tol);
}

TEST_CASE("diagnostics fields") {
  const HardLabels y = balanced_labels(20, 2);
  const HardLabels z = balanced_labels(20, 2);

  const MeanParams flat(Matrix::Constant(2, 2, 1.5));
  const InfoMatrix none = chernoff_info(flat);
  const ModelDiagnostics d0 = diagnostics(flat, flat, y, z, none.i_kr);
  REQUIRE(d0.omega == 1.0);
  REQUIRE(d0.beta == 1.0);
  REQUIRE(d0.alpha == 1.0);

  // Example-1 parameters: diag 2.0, off 0.5 -> omega = 4, beta = 1.
  Matrix lm(2, 2);
  lm << 2.0, 0.5, 0.5, 2.0;
  const MeanParams lam(lm);
  const InfoMatrix im = chernoff_info(lam);
  const ModelDiagnostics d1 = diagnostics(lam, lam, y, z, im.i_kr);
  REQUIRE(d1.omega == Catch::Approx(4.0));
  REQUIRE(d1.beta == Catch::Approx(1.0));
  // J_kr >= 1/2 whenever finite (general bound I_kr <= 2 L ||Lambda||_inf).
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      if (std::isfinite(d1.j_kr(a, b))) REQUIRE(d1.j_kr(a, b) >= 0.5);

  // Zero entry -> omega = +infinity, encoded not thrown.
  Matrix zl(2, 2);
  zl << 1.0, 0.0, 1.0, 1.0;
  const ModelDiagnostics d2 = diagnostics(MeanParams(zl), lam, y, z, im.i_kr);
  REQUIRE(std::isinf(d2.omega));
}
