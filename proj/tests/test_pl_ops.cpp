#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "bisbm/metrics.hpp"
#include "bisbm/model.hpp"
#include "bisbm/pl_ops.hpp"
#include "bisbm/rng.hpp"

using namespace bisbm;

namespace {

BiAdjacency random_sparse(std::int64_t n, std::int64_t m, double density, Rng& r,
                          bool counts = false) {
  std::vector<BiAdjacency::Entry> e;
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < m; ++j)
      if (r.uniform() < density)
        e.emplace_back(i, j, counts ? static_cast<double>(1 + r.uniform_int(3)) : 1.0);
  return BiAdjacency::from_entries(n, m, std::move(e), !counts);
}

HardLabels random_hard(std::size_t n, int k, Rng& r) {
  std::vector<int> a(n);
  for (auto& v : a) v = static_cast<int>(r.uniform_int(static_cast<std::uint64_t>(k)));
  return HardLabels(std::move(a), k);
}

// Direct high-precision evaluation of the class-posterior formula.
Matrix posterior_direct(const Matrix& b, const Matrix& lambda, const Vector& pi) {
  const int k = static_cast<int>(lambda.rows());
  Matrix out(b.rows(), k);
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    std::vector<long double> raw(static_cast<std::size_t>(k));
    long double mx = -1e300L;
    for (int c = 0; c < k; ++c) {
      long double s = std::log(static_cast<long double>(pi(c)));
      for (Eigen::Index l = 0; l < b.cols(); ++l) {
        const long double lam = std::max<long double>(lambda(c, l), kLambdaFloor);
        s += static_cast<long double>(b(i, l)) * std::log(lam) - lam;
      }
      raw[static_cast<std::size_t>(c)] = s;
      mx = std::max(mx, s);
    }
    long double z = 0.0L;
    for (int c = 0; c < k; ++c) z += std::exp(raw[static_cast<std::size_t>(c)] - mx);
    for (int c = 0; c < k; ++c)
      out(i, c) = static_cast<double>(std::exp(raw[static_cast<std::size_t>(c)] - mx) / z);
  }
  return out;
}

}  // namespace

TEST_CASE("block_compress on hard and soft labels") {
  Matrix d(2, 3);
  d << 1, 0, 1, 0, 1, 1;
  const BiAdjacency a = BiAdjacency::from_dense(d);
  const BlockCompression b = block_compress(a, HardLabels({0, 1, 0}, 2));
  REQUIRE(b.b(0, 0) == 2.0);
  REQUIRE(b.b(0, 1) == 0.0);
  REQUIRE(b.b(1, 0) == 1.0);
  REQUIRE(b.b(1, 1) == 1.0);

  const BlockCompression onecls = block_compress(a, HardLabels({0, 0, 0}, 2));
  REQUIRE(onecls.b(0, 0) == 2.0);
  REQUIRE(onecls.b(1, 0) == 2.0);
  REQUIRE(onecls.b.col(1).isZero());

  SoftLabels half(Matrix::Constant(3, 2, 0.5));
  const BlockCompression bs = block_compress(a, half);
  REQUIRE(bs.b(0, 0) == 1.0);
  REQUIRE(bs.b(0, 1) == 1.0);
  REQUIRE(bs.b(1, 0) == 1.0);
  REQUIRE(bs.b(1, 1) == 1.0);
}

TEST_CASE("compression row sums equal degrees") {
  Rng r(501);
  for (int trial = 0; trial < 20; ++trial) {
    const BiAdjacency a = random_sparse(15, 25, 0.2, r, trial % 2 == 1);
    const HardLabels z = random_hard(25, 3, r);
    const BlockCompression b = block_compress(a, z);
    for (std::int64_t i = 0; i < a.rows(); ++i)
      REQUIRE(b.b.row(i).sum() == a.row_mass(i));  // exact for hard labels
  }
}

TEST_CASE("estimate_means examples and composition identity") {
  BlockCompression b;
  b.b = Matrix(2, 2);
  b.b << 2, 0, 1, 1;
  const MeansResult mr = estimate_means(b, HardLabels({0, 1}, 2));
  REQUIRE(mr.lambda.lambda == b.b);
  REQUIRE(mr.empty_classes.empty());

  const MeansResult one = estimate_means(b, HardLabels({0, 0}, 1));
  REQUIRE(one.lambda.lambda(0, 0) == 1.5);
  REQUIRE(one.lambda.lambda(0, 1) == 0.5);

  // L(B(A, z), y) = direct estimator, exactly, on random instances.
  Rng r(502);
  for (int trial = 0; trial < 100; ++trial) {
    const BiAdjacency a = random_sparse(12, 18, 0.25, r, trial % 3 == 0);
    const HardLabels y = random_hard(12, 3, r);
    const HardLabels z = random_hard(18, 2, r);
    const MeansResult composed = estimate_means(block_compress(a, z), y);
    const MeanParams direct = mean_estimator_direct(a, y, z);
    if (composed.empty_classes.empty()) {
      REQUIRE(composed.lambda.lambda == direct.lambda);
    }
  }

  // On E[A] with the true labels the estimator recovers Lambda exactly.
  Matrix p(2, 3);
  p << 0.5, 0.2, 0.1, 0.05, 0.4, 0.3;
  const Connectivity conn(p);
  const HardLabels y = balanced_labels(10, 2);
  const HardLabels z = balanced_labels(12, 3);
  const MeanParams lam = true_mean_params(conn, z);
  Matrix ea(10, 12);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 12; ++j)
      ea(i, j) = p(y.a[static_cast<std::size_t>(i)], z.a[static_cast<std::size_t>(j)]);
  const MeansResult est = estimate_means(block_compress(BiAdjacency::from_dense(ea), z), y);
  REQUIRE((est.lambda.lambda - lam.lambda).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("empty class policy re-seeds at the column mean") {
  BlockCompression b;
  b.b = Matrix(2, 2);
  b.b << 4, 0, 2, 2;
  MeansResult mr = estimate_means(b, HardLabels({0, 0}, 2));  // class 1 empty
  REQUIRE(mr.empty_classes == std::vector<int>{1});
  REQUIRE(mr.lambda.lambda(1, 0) == 3.0);
  REQUIRE(mr.lambda.lambda(1, 1) == 1.0);
  jitter_empty_rows(mr, 9);
  REQUIRE(mr.lambda.lambda(1, 0) != 3.0);  // jitter applied
  REQUIRE(mr.lambda.lambda(1, 0) == Catch::Approx(3.0).margin(0.2));
}

TEST_CASE("class_posterior symmetry, dominance, and a direct oracle") {
  BlockCompression b;
  b.b = Matrix(3, 2);
  b.b << 5, 0, 1, 1, 0, 4;

  const MeanParams same(Matrix::Constant(2, 2, 2.0));
  const SoftLabels uniform = class_posterior(b, same, ClassPrior::flat_prior(2));
  for (Eigen::Index i = 0; i < 3; ++i) {
    REQUIRE(uniform.w(i, 0) == Catch::Approx(0.5));
    REQUIRE(uniform.w(i, 1) == Catch::Approx(0.5));
  }

  Matrix lm(2, 2);
  lm << 5, 1, 1, 5;
  const SoftLabels post = class_posterior(b, MeanParams(lm), ClassPrior::flat_prior(2));
  REQUIRE(post.w(0, 0) > post.w(0, 1));  // b = (5, 0) decides for class 0

  Rng r(503);
  for (int trial = 0; trial < 30; ++trial) {
    BlockCompression rb;
    rb.b = Matrix(6, 2);
    for (Eigen::Index i = 0; i < 6; ++i)
      for (Eigen::Index l = 0; l < 2; ++l) rb.b(i, l) = static_cast<double>(r.uniform_int(9));
    Matrix rl(3, 2);
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index l = 0; l < 2; ++l) rl(i, l) = 0.2 + 6.0 * r.uniform();
    Vector pi(3);
    pi << 0.5, 0.3, 0.2;
    ClassPrior prior;
    prior.pi = pi;
    const SoftLabels got = class_posterior(rb, MeanParams(rl), prior);
    const Matrix want = posterior_direct(rb.b, rl, pi);
    REQUIRE((got.w - want).cwiseAbs().maxCoeff() < 1e-12);
    for (Eigen::Index i = 0; i < got.w.rows(); ++i)
      REQUIRE(std::abs(got.w.row(i).sum() - 1.0) < 1e-9);
    // Invariance to positive scaling of the prior.
    ClassPrior scaled;
    scaled.pi = 17.5 * pi;
    const SoftLabels got2 = class_posterior(rb, MeanParams(rl), scaled);
    REQUIRE((got.w - got2.w).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("poisson_llr closed forms") {
  Vector x(2), la(2), lb(2);
  la << 2, 1;
  REQUIRE(poisson_llr(la, la, la) == 0.0);

  x << 0, 0;
  lb << 1, 2;
  REQUIRE(poisson_llr(x, la, lb) == Catch::Approx((1.0 - 2.0) + (2.0 - 1.0)));

  x << 2, 1;
  REQUIRE(poisson_llr(x, la, lb) == Catch::Approx(std::log(2.0)));
}

TEST_CASE("lr_classify matches a brute-force likelihood table") {
  Rng gen(504);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 8, m = 8, k = 2, L = 2;
    const BiAdjacency a = random_sparse(n, m, 0.4, gen);
    const HardLabels z = random_hard(m, L, gen);
    Matrix lm(k, L);
    for (int c = 0; c < k; ++c)
      for (int l = 0; l < L; ++l) lm(c, l) = 0.3 + 5.0 * gen.uniform();
    if (trial % 4 == 0) lm.row(1) = lm.row(0);  // force exact ties sometimes
    const std::uint64_t seed = 1000 + trial;
    const HardLabels got = lr_classify(a, MeanParams(lm), z, seed);

    const BlockCompression b = block_compress(a, z);
    for (int i = 0; i < n; ++i) {
      std::vector<double> score(static_cast<std::size_t>(k));
      for (int c = 0; c < k; ++c) {
        double s = 0.0;
        for (int l = 0; l < L; ++l) {
          const double lam = std::max(lm(c, l), kLambdaFloor);
          s += b.b(i, l) * std::log(lam) - lam;
        }
        score[static_cast<std::size_t>(c)] = s;
      }
      double best = score[0];
      std::vector<int> ties{0};
      for (int c = 1; c < k; ++c) {
        if (score[static_cast<std::size_t>(c)] > best) {
          best = score[static_cast<std::size_t>(c)];
          ties.assign(1, c);
        } else if (score[static_cast<std::size_t>(c)] == best) {
          ties.push_back(c);
        }
      }
      int want = ties[0];
      if (ties.size() > 1) {
        Rng tr(Rng::derive(seed, static_cast<std::uint64_t>(i)));
        want = ties[static_cast<std::size_t>(tr.uniform_int(ties.size()))];
      }
      REQUIRE(got.a[static_cast<std::size_t>(i)] == want);
    }
  }
}

TEST_CASE("lr_classify dominance, pairwise statistics, and equivariance") {
  Matrix d(4, 4);
  d << 1, 1, 0, 0, 1, 0, 1, 0, 0, 1, 1, 1, 1, 1, 1, 0;
  const BiAdjacency a = BiAdjacency::from_dense(d);
  const HardLabels z = balanced_labels(4, 2);
  Matrix dominant(2, 2);
  dominant << 5.0, 5.0, 0.01, 0.01;
  const HardLabels all0 = lr_classify(a, MeanParams(dominant), z, 0);
  for (int v : all0.a) REQUIRE(v == 0);

  // The winner has all pairwise log-likelihood ratios against it negative.
  Matrix lm(2, 2);
  lm << 4, 1, 1, 4;
  const HardLabels got = lr_classify(a, MeanParams(lm), z, 0);
  const BlockCompression b = block_compress(a, z);
  for (int i = 0; i < 4; ++i) {
    const int w = got.a[static_cast<std::size_t>(i)];
    for (int r = 0; r < 2; ++r) {
      if (r == w) continue;
      const double y_ikr =
          poisson_llr(b.b.row(i).transpose(), lm.row(r).transpose(), lm.row(w).transpose());
      REQUIRE(y_ikr <= 0.0);
    }
  }

  // Equivariance: permuting the rows of Lambda permutes the output classes.
  Rng gen(505);
  for (int trial = 0; trial < 10; ++trial) {
    const BiAdjacency ra = random_sparse(10, 10, 0.35, gen);
    const HardLabels rz = random_hard(10, 2, gen);
    Matrix rl(3, 2);
    for (int c = 0; c < 3; ++c)
      for (int l = 0; l < 2; ++l) rl(c, l) = 0.5 + 4.0 * gen.uniform();
    const std::vector<int> tau{2, 0, 1};
    Matrix permuted(3, 2);
    for (int c = 0; c < 3; ++c) permuted.row(tau[static_cast<std::size_t>(c)]) = rl.row(c);
    const HardLabels base = lr_classify(ra, MeanParams(rl), rz, 1);
    const HardLabels perm = lr_classify(ra, MeanParams(permuted), rz, 1);
    REQUIRE(perm == apply_permutation(base, tau));
  }
}

TEST_CASE("hard posterior argmax equals lr_classify with a flat prior") {
  Rng gen(509);
  for (int trial = 0; trial < 15; ++trial) {
    const BiAdjacency a = random_sparse(10, 12, 0.3, gen);
    const HardLabels z = random_hard(12, 2, gen);
    Matrix lm(3, 2);
    for (int c = 0; c < 3; ++c)
      for (int l = 0; l < 2; ++l) lm(c, l) = 0.4 + 4.0 * gen.uniform();
    const std::uint64_t seed = 4200 + trial;
    const HardLabels via_lr = lr_classify(a, MeanParams(lm), z, seed);
    const HardLabels via_posterior = pl_simplified(a, z, MeanParams(lm), seed);
    REQUIRE(via_lr == via_posterior);
  }
}

TEST_CASE("pl_simplified ties are uniform over seeds") {
  Matrix d = Matrix::Zero(1, 3);
  d(0, 0) = 1;
  const BiAdjacency a = BiAdjacency::from_dense(d);
  const HardLabels z({0, 1, 1}, 2);
  const MeanParams flat(Matrix::Constant(3, 2, 1.0));
  std::vector<int> hist(3, 0);
  for (int s = 0; s < 3000; ++s)
    ++hist[static_cast<std::size_t>(pl_simplified(a, z, flat, static_cast<std::uint64_t>(s)).a[0])];
  for (int c = 0; c < 3; ++c) REQUIRE(std::abs(hist[static_cast<std::size_t>(c)] - 1000) < 150);

  // Separated instance decides for class 0 through either route.
  Matrix sep(2, 2);
  sep << 5, 1, 1, 5;
  Matrix bd = Matrix::Zero(1, 2);
  bd(0, 0) = 1;
  const BiAdjacency sa = BiAdjacency::from_dense(bd);
  const HardLabels sz({0, 0}, 2);
  REQUIRE(pl_simplified(sa, sz, MeanParams(sep), 5).a[0] == 0);
}

TEST_CASE("pl_meta is a fixed point at the truth on E[A]") {
  Matrix p(2, 2);
  p << 0.5, 0.05, 0.05, 0.5;
  const HardLabels y = balanced_labels(40, 2);
  const HardLabels z = balanced_labels(40, 2);
  Matrix ea(40, 40);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j)
      ea(i, j) = p(y.a[static_cast<std::size_t>(i)], z.a[static_cast<std::size_t>(j)]);
  const BiAdjacency a = BiAdjacency::from_dense(ea);

  PLOptions opts;
  opts.seed = 3;
  PLResult res = pl_meta(a, y, z, opts);
  REQUIRE(res.trace.converged);
  REQUIRE(res.trace.iters.size() == 1);
  REQUIRE(res.y == y);
  REQUIRE(res.z == z);

  opts.hardening = Hardening::kEachStep;
  PLResult res2 = pl_meta(a, y, z, opts);
  REQUIRE(res2.y == y);
  REQUIRE(res2.z == z);
}

TEST_CASE("pl_meta improves noisy initial labels (Monte Carlo)") {
  const int n = 400, m = 400, seeds = 50;
  Matrix p(2, 2);
  p << 30.0 / n, 5.0 / n, 5.0 / n, 30.0 / n;
  const Connectivity conn(p);
  const HardLabels y = balanced_labels(n, 2);
  const HardLabels z = balanced_labels(m, 2);
  int improved = 0;
  for (int s = 0; s < seeds; ++s) {
    const BiAdjacency a = sample_sbm(conn, y, z, 4000 + s, SbmMode::Bernoulli, 2);
    Rng noise(8000 + s);
    HardLabels y0 = y, z0 = z;
    for (auto& v : y0.a)
      if (noise.uniform() < 0.10) v = 1 - v;
    for (auto& v : z0.a)
      if (noise.uniform() < 0.10) v = 1 - v;
    PLOptions opts;
    opts.seed = 600 + s;
    opts.threads = 2;
    const PLResult res = pl_meta(a, y0, z0, opts);
    if (mis(res.y, y) < mis(y0, y)) ++improved;
  }
  REQUIRE(improved >= 45);
}
