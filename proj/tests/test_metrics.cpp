#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

#include "bisbm/metrics.hpp"
#include "bisbm/rng.hpp"

using namespace bisbm;

namespace {

// Exhaustive K! search for the permutation minimizing mismatches.
std::pair<std::vector<int>, int> brute_force_perm(const HardLabels& y_hat, const HardLabels& y) {
  const int k = std::max(y_hat.num_classes, y.num_classes);
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best_perm = perm;
  int best = -1;
  do {
    int bad = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
      bad += (perm[static_cast<std::size_t>(y_hat.a[i])] != y.a[i]);
    if (best < 0 || bad < best) {
      best = bad;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best_perm, best};
}

HardLabels noisy_labels(const HardLabels& base, double rate, int k, Rng& r) {
  HardLabels out = base;
  for (auto& v : out.a)
    if (r.uniform() < rate) v = static_cast<int>(r.uniform_int(static_cast<std::uint64_t>(k)));
  return out;
}

}  // namespace

TEST_CASE("optimal_permutation identity, relabeling, and brute force") {
  const HardLabels y({0, 1, 2, 0, 1, 2, 0, 1}, 3);
  REQUIRE(optimal_permutation(y, y) == identity_permutation(3));

  const std::vector<int> tau{2, 0, 1};
  const HardLabels relabeled = apply_permutation(y, tau);
  // sigma maps relabeled back onto y, i.e. sigma = tau^{-1}.
  REQUIRE(optimal_permutation(relabeled, y) == invert(tau));

  Rng r(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 4;
    std::vector<int> truth(40);
    for (auto& v : truth) v = static_cast<int>(r.uniform_int(k));
    const HardLabels yt(truth, k);
    const HardLabels yh = noisy_labels(yt, 0.3, k, r);
    const auto [bp, bbad] = brute_force_perm(yh, yt);
    const auto sigma = optimal_permutation(yh, yt);
    int bad = 0;
    for (std::size_t i = 0; i < yt.size(); ++i)
      bad += (sigma[static_cast<std::size_t>(yh.a[i])] != yt.a[i]);
    REQUIRE(bad == bbad);
  }
}

TEST_CASE("mis, mis_k, dmis basics and decomposition") {
  const HardLabels y({0, 0, 1, 1}, 2);
  REQUIRE(mis(y, y) == 0.0);
  REQUIRE(dmis(y, y) == 0.0);
  REQUIRE(mis_k(y, y, 0) == 0.0);

  HardLabels flip = y;
  flip.a[0] = 1;
  REQUIRE(dmis(flip, y) == 0.25);
  REQUIRE(mis(flip, y) == 0.25);

  Rng r(77);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 3;
    std::vector<int> t(60), h(60);
    for (auto& v : t) v = static_cast<int>(r.uniform_int(k));
    for (auto& v : h) v = static_cast<int>(r.uniform_int(k));
    const HardLabels yt(t, k), yh(h, k);
    // Mis = sum_k pi_k Mis_k exactly.
    const auto pis = yt.proportions();
    double decomposed = 0.0;
    for (int c = 0; c < k; ++c) decomposed += pis[static_cast<std::size_t>(c)] * mis_k(yh, yt, c);
    REQUIRE(mis(yh, yt) == Catch::Approx(decomposed).epsilon(1e-12));
    // Mis <= dMis; invariance under relabeling of the prediction.
    REQUIRE(mis(yh, yt) <= dmis(yh, yt) + 1e-15);
    const HardLabels relab = apply_permutation(yh, {2, 0, 1});
    REQUIRE(mis(relab, yt) == Catch::Approx(mis(yh, yt)));
    // Mis <= max_k Mis_k and max_k Mis_k <= Mis / min_k pi_k.
    double mx = 0.0;
    for (int c = 0; c < k; ++c) mx = std::max(mx, mis_k(yh, yt, c));
    const double min_pi = *std::min_element(pis.begin(), pis.end());
    REQUIRE(mis(yh, yt) <= mx + 1e-12);
    if (min_pi > 0) REQUIRE(mx <= mis(yh, yt) / min_pi + 1e-12);
  }
}

TEST_CASE("small dmis forces the identity optimal permutation, uniquely") {
  Rng r(123);
  for (int trial = 0; trial < 25; ++trial) {
    const int k = 3;
    const HardLabels yt = balanced_labels(90, k);
    const double min_pi = 1.0 / k;
    // Flip strictly fewer than n/2 * min_k pi_k labels.
    HardLabels yh = yt;
    const int flips = static_cast<int>(r.uniform_int(14));  // < 90 * (1/3) / 2 = 15
    for (int f = 0; f < flips; ++f) {
      const std::size_t i = static_cast<std::size_t>(r.uniform_int(90));
      yh.a[i] = static_cast<int>(r.uniform_int(k));
    }
    if (dmis(yh, yt) >= 0.5 * min_pi) continue;
    REQUIRE(optimal_permutation(yh, yt) == identity_permutation(k));
    // Uniqueness: every non-identity permutation does strictly worse.
    std::vector<int> perm = identity_permutation(k);
    int id_bad = 0;
    for (std::size_t i = 0; i < yt.size(); ++i) id_bad += (yh.a[i] != yt.a[i]);
    do {
      if (perm == identity_permutation(k)) continue;
      int bad = 0;
      for (std::size_t i = 0; i < yt.size(); ++i)
        bad += (perm[static_cast<std::size_t>(yh.a[i])] != yt.a[i]);
      REQUIRE(bad > id_bad);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

TEST_CASE("nmi endpoints, null level, symmetry") {
  const HardLabels y = balanced_labels(50, 2);
  REQUIRE(nmi(y, y) == 1.0);

  const HardLabels constant(std::vector<int>(50, 0), 2);
  REQUIRE(nmi(constant, y) == 0.0);
  REQUIRE(nmi(constant, constant) == 1.0);

  Rng r(2024);
  double total = 0.0;
  for (int s = 0; s < 50; ++s) {
    std::vector<int> a(200), b(200);
    for (auto& v : a) v = static_cast<int>(r.uniform_int(4));
    for (auto& v : b) v = static_cast<int>(r.uniform_int(4));
    const HardLabels la(a, 4), lb(b, 4);
    const double v = nmi(la, lb);
    REQUIRE(v == Catch::Approx(nmi(lb, la)).epsilon(1e-12));
    const double vr = nmi(apply_permutation(la, {3, 1, 0, 2}), lb);
    REQUIRE(v == Catch::Approx(vr).epsilon(1e-12));
    total += v;
  }
  REQUIRE(total / 50 < 0.05);
}
