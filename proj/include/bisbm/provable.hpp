#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "bisbm/adjacency.hpp"
#include "bisbm/common.hpp"
#include "bisbm/labels.hpp"
#include "bisbm/metrics.hpp"
#include "bisbm/model.hpp"
#include "bisbm/parallel.hpp"
#include "bisbm/pl_ops.hpp"
#include "bisbm/rng.hpp"
#include "bisbm/spectral.hpp"

namespace bisbm {

// Random 2 x (Q x Q) partition: rows split into two halves, each half split
// into Q groups; columns split into Q groups. All groups are contiguous in a
// uniformly random permutation, so sizes differ by at most one.
struct PartitionPlan {
  int q = 4;
  std::int64_t n = 0, m = 0;
  std::uint64_t seed = 0;
  std::vector<int> row_perm, col_perm;
  std::vector<int> top_rows, bottom_rows;
  std::vector<std::vector<int>> top_groups, bottom_groups;  // q groups each
  std::vector<std::vector<int>> col_groups;                 // q groups
};

namespace detail {

inline std::vector<std::vector<int>> split_groups(const std::vector<int>& ids, int q) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(q));
  const std::size_t n = ids.size();
  for (int g = 0; g < q; ++g) {
    const std::size_t lo = n * static_cast<std::size_t>(g) / static_cast<std::size_t>(q);
    const std::size_t hi = n * static_cast<std::size_t>(g + 1) / static_cast<std::size_t>(q);
    out[static_cast<std::size_t>(g)].assign(ids.begin() + static_cast<std::ptrdiff_t>(lo),
                                            ids.begin() + static_cast<std::ptrdiff_t>(hi));
  }
  return out;
}

}  // namespace detail

inline PartitionPlan make_partition(std::int64_t n, std::int64_t m, int q, std::uint64_t seed) {
  if (q < 1) throw DimensionError("make_partition: q must be >= 1");
  if (n < 2L * q * q || m < q)
    throw DataError("make_partition: not enough rows or columns for a 2x(QxQ) partition");
  PartitionPlan plan;
  plan.q = q;
  plan.n = n;
  plan.m = m;
  plan.seed = seed;
  plan.row_perm.resize(static_cast<std::size_t>(n));
  plan.col_perm.resize(static_cast<std::size_t>(m));
  std::iota(plan.row_perm.begin(), plan.row_perm.end(), 0);
  std::iota(plan.col_perm.begin(), plan.col_perm.end(), 0);
  Rng rr(Rng::derive(seed, 11));
  Rng rc(Rng::derive(seed, 12));
  rr.shuffle(plan.row_perm);
  rc.shuffle(plan.col_perm);
  const std::size_t half = static_cast<std::size_t>((n + 1) / 2);
  plan.top_rows.assign(plan.row_perm.begin(), plan.row_perm.begin() + static_cast<std::ptrdiff_t>(half));
  plan.bottom_rows.assign(plan.row_perm.begin() + static_cast<std::ptrdiff_t>(half), plan.row_perm.end());
  plan.top_groups = detail::split_groups(plan.top_rows, q);
  plan.bottom_groups = detail::split_groups(plan.bottom_rows, q);
  plan.col_groups = detail::split_groups(plan.col_perm, q);
  return plan;
}

// Permutation sigma on classes of `labels_a` maximizing agreement with
// `labels_b`, solved as a K x K linear assignment on the confusion matrix.
inline std::vector<int> match_labels(const HardLabels& labels_a, const HardLabels& labels_b) {
  return optimal_permutation(labels_a, labels_b);
}

// Two spectral estimates per group: `primary[g]` is the unprimed estimate
// and `secondary[g]` the primed one. Invariant used by fusion: primary[g]
// and secondary[g+1] come from the same spectral run.
struct SubBlockLabels {
  std::vector<HardLabels> primary;
  std::vector<HardLabels> secondary;
};

struct FuseDiag {
  bool cyclic_consistent = true;
  std::vector<std::vector<int>> link_permutations;
};

// Chain the per-overlap optimal permutations so all Q groups carry one
// consistent labeling (reference frame: the run covering group Q-1 and 0).
// The per-block closeness condition behind the theory is unobservable at
// runtime; fusion is always performed. A nonidentity product around the
// cyclic loop is reported via FuseDiag.
inline std::vector<HardLabels> fuse_subblock_labels(const SubBlockLabels& sub,
                                                    FuseDiag* diag = nullptr) {
  const int q = static_cast<int>(sub.primary.size());
  if (q == 0 || sub.secondary.size() != sub.primary.size())
    throw DimensionError("fuse_subblock_labels: malformed sub-block labels");
  const int k = sub.primary[0].num_classes;
  std::vector<std::vector<int>> frame(static_cast<std::size_t>(q));
  frame[0] = identity_permutation(k);
  for (int t = 1; t < q; ++t) {
    const auto link = match_labels(sub.primary[static_cast<std::size_t>(t - 1)],
                                   sub.secondary[static_cast<std::size_t>(t - 1)]);
    frame[static_cast<std::size_t>(t)] = compose(frame[static_cast<std::size_t>(t - 1)], link);
    if (diag) diag->link_permutations.push_back(link);
  }
  if (diag) {
    const auto last_link = match_labels(sub.primary[static_cast<std::size_t>(q - 1)],
                                        sub.secondary[static_cast<std::size_t>(q - 1)]);
    const auto loop = compose(frame[static_cast<std::size_t>(q - 1)], last_link);
    diag->link_permutations.push_back(last_link);
    diag->cyclic_consistent = (loop == identity_permutation(k));
  }
  std::vector<HardLabels> out(static_cast<std::size_t>(q));
  for (int g = 0; g < q; ++g)
    out[static_cast<std::size_t>(g)] = apply_permutation(
        sub.primary[static_cast<std::size_t>(g)], frame[static_cast<std::size_t>((g + 1) % q)]);
  return out;
}

struct StageMis {
  double fused_spectral = -1.0;   // after step 5 (partitioned half)
  double after_local_lr = -1.0;   // after step 7 (partitioned half)
  double classified_half = -1.0;  // after step 11 (other half)
};

struct ProvableReport {
  StageMis pass1, pass2;          // row-label stages of the row pipeline
  double final_row_mis = -1.0;
  double final_col_mis = -1.0;
  int cyclic_inconsistencies = 0;
  int empty_class_events = 0;
  std::vector<std::string> warnings;
  // Step-5 artifacts of pass 1 of the row pipeline, for dataflow checks:
  // fused labels live on plan.bottom_groups / plan.col_groups node ids.
  PartitionPlan plan;
  std::vector<HardLabels> step5_row_labels;  // per bottom row group
  std::vector<HardLabels> step5_col_labels;  // per column group
};

struct ProvableOptions {
  const HardLabels* y_true = nullptr;
  const HardLabels* z_true = nullptr;
  int threads = 1;
};

namespace detail {

struct HalfPassResult {
  HardLabels labels;              // labels of the classified (other) half rows
  std::vector<int> ids;           // original row ids of the classified half
  std::vector<HardLabels> fused_rows;  // step-5 fused row labels (per group)
  std::vector<HardLabels> fused_cols;  // step-5 fused column labels (per group)
  StageMis stage;
  int cyclic_bad = 0;
  int empty_events = 0;
};

inline HardLabels concat_labels(const std::vector<HardLabels>& parts, int k) {
  std::vector<int> a;
  for (const auto& p : parts) a.insert(a.end(), p.a.begin(), p.a.end());
  return HardLabels(std::move(a), k);
}

inline HardLabels gather_truth(const HardLabels& truth, const std::vector<int>& ids) {
  std::vector<int> a(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) a[i] = truth.a[static_cast<std::size_t>(ids[i])];
  return HardLabels(std::move(a), truth.num_classes);
}

// One half-pass of Algorithm 3 (steps 2-11): partition `part_groups` x
// `col_groups` of A, spectral-initialize, fuse, two rounds of local
// estimation + LR, then classify `other_ids` with the global parameters.
// When `anchor` is nonnull the fused row labels are matched to it (step 12).
inline HalfPassResult half_pass(const BiAdjacency& a, int k, int l, const SpectralConfig& cfg,
                                std::uint64_t seed,
                                const std::vector<std::vector<int>>& part_groups,
                                const std::vector<std::vector<int>>& col_groups,
                                const std::vector<int>& other_ids, const HardLabels* anchor,
                                const HardLabels* y_true, int threads) {
  const int q = static_cast<int>(part_groups.size());
  HalfPassResult res;
  res.ids = other_ids;

  // Step 2: the q x q sub-block grid of the partitioned half.
  std::vector<std::vector<BiAdjacency>> blk(static_cast<std::size_t>(q),
                                            std::vector<BiAdjacency>(static_cast<std::size_t>(q)));
  {
    std::vector<std::pair<int, int>> cells;
    for (int r = 0; r < q; ++r)
      for (int c = 0; c < q; ++c) cells.emplace_back(r, c);
    parallel_for(cells.size(), threads, [&](std::size_t t) {
      const auto [r, c] = cells[t];
      blk[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
          a.submatrix(part_groups[static_cast<std::size_t>(r)],
                      col_groups[static_cast<std::size_t>(c)]);
    });
  }

  // Steps 3-4: spectral initialization on the stacked pairs. Run t < q is
  // the row run on [A^{(t-1,t)}; A^{(t,t)}]; run q+t the column run on
  // [A^{(t,t)} A^{(t,t+1)}].
  SubBlockLabels rows, cols;
  rows.primary.resize(static_cast<std::size_t>(q));
  rows.secondary.resize(static_cast<std::size_t>(q));
  cols.primary.resize(static_cast<std::size_t>(q));
  cols.secondary.resize(static_cast<std::size_t>(q));
  parallel_for(static_cast<std::size_t>(2 * q), threads, [&](std::size_t t) {
    SpectralConfig scfg = cfg;
    scfg.threads = 1;
    scfg.seed = Rng::derive(seed, {21, static_cast<std::uint64_t>(t)});
    if (t < static_cast<std::size_t>(q)) {
      const int qq = static_cast<int>(t);
      const int prev = (qq + q - 1) % q;
      // Column-stack rows of groups prev and qq over column group qq.
      std::vector<int> stack_rows = part_groups[static_cast<std::size_t>(prev)];
      stack_rows.insert(stack_rows.end(), part_groups[static_cast<std::size_t>(qq)].begin(),
                        part_groups[static_cast<std::size_t>(qq)].end());
      const BiAdjacency stacked = a.submatrix(stack_rows, col_groups[static_cast<std::size_t>(qq)]);
      const HardLabels lab = spectral_cluster_rows(stacked, k, l, scfg);
      const std::size_t n_prev = part_groups[static_cast<std::size_t>(prev)].size();
      std::vector<int> first(lab.a.begin(), lab.a.begin() + static_cast<std::ptrdiff_t>(n_prev));
      std::vector<int> second(lab.a.begin() + static_cast<std::ptrdiff_t>(n_prev), lab.a.end());
      rows.primary[static_cast<std::size_t>(prev)] = HardLabels(std::move(first), k);
      rows.secondary[static_cast<std::size_t>(qq)] = HardLabels(std::move(second), k);
    } else {
      const int qq = static_cast<int>(t) - q;
      const int next = (qq + 1) % q;
      // Row-stack column groups qq and next over row group qq.
      std::vector<int> stack_cols = col_groups[static_cast<std::size_t>(qq)];
      stack_cols.insert(stack_cols.end(), col_groups[static_cast<std::size_t>(next)].begin(),
                        col_groups[static_cast<std::size_t>(next)].end());
      const BiAdjacency stacked = a.submatrix(part_groups[static_cast<std::size_t>(qq)], stack_cols);
      const HardLabels lab = spectral_cluster_cols(stacked, k, l, scfg);
      const std::size_t m_first = col_groups[static_cast<std::size_t>(qq)].size();
      std::vector<int> first(lab.a.begin(), lab.a.begin() + static_cast<std::ptrdiff_t>(m_first));
      std::vector<int> second(lab.a.begin() + static_cast<std::ptrdiff_t>(m_first), lab.a.end());
      cols.primary[static_cast<std::size_t>(qq)] = HardLabels(std::move(first), l);
      cols.secondary[static_cast<std::size_t>(next)] = HardLabels(std::move(second), l);
    }
  });

  // Step 5: consistent global labels. In the first pass the row estimates
  // are fused along the cyclic overlaps; in the second pass (step 12) each
  // group is matched to the anchor labels from the first pass instead, so
  // the two halves concatenate without a final global match.
  std::vector<HardLabels> yt;
  if (anchor == nullptr) {
    FuseDiag diag_r;
    yt = fuse_subblock_labels(rows, &diag_r);
    res.cyclic_bad += diag_r.cyclic_consistent ? 0 : 1;
  } else {
    yt.resize(static_cast<std::size_t>(q));
    for (int g = 0; g < q; ++g) {
      const HardLabels anchor_g = gather_truth(*anchor, part_groups[static_cast<std::size_t>(g)]);
      const auto sigma = match_labels(rows.primary[static_cast<std::size_t>(g)], anchor_g);
      yt[static_cast<std::size_t>(g)] =
          apply_permutation(rows.primary[static_cast<std::size_t>(g)], sigma);
    }
  }
  FuseDiag diag_c;
  std::vector<HardLabels> zt = fuse_subblock_labels(cols, &diag_c);
  res.cyclic_bad += diag_c.cyclic_consistent ? 0 : 1;
  res.fused_rows = yt;
  res.fused_cols = zt;

  if (y_true) {
    std::vector<int> part_ids;
    for (const auto& g : part_groups) part_ids.insert(part_ids.end(), g.begin(), g.end());
    res.stage.fused_spectral = mis(concat_labels(yt, k), gather_truth(*y_true, part_ids));
  }

  // Steps 6-8: local mean parameters on G2 and the first LR update, rows and
  // columns both driven by the step-5 labels.
  std::vector<HardLabels> yt2(static_cast<std::size_t>(q)), zt2(static_cast<std::size_t>(q));
  std::vector<int> empty_events(static_cast<std::size_t>(2 * q), 0);
  parallel_for(static_cast<std::size_t>(2 * q), threads, [&](std::size_t t) {
    if (t < static_cast<std::size_t>(q)) {
      const int qq = static_cast<int>(t);
      const int c2 = (qq + 2) % q;
      const BiAdjacency& blk_q = blk[static_cast<std::size_t>(qq)][static_cast<std::size_t>(c2)];
      BlockCompression b = block_compress(blk_q, zt[static_cast<std::size_t>(c2)]);
      MeansResult mr = estimate_means(b, yt[static_cast<std::size_t>(qq)]);
      if (!mr.empty_classes.empty()) {
        jitter_empty_rows(mr, Rng::derive(seed, {31, t}));
        empty_events[t] = static_cast<int>(mr.empty_classes.size());
      }
      yt2[static_cast<std::size_t>(qq)] =
          lr_classify(blk_q, mr.lambda, zt[static_cast<std::size_t>(c2)],
                      Rng::derive(seed, {32, t}), 1);
    } else {
      const int qq = static_cast<int>(t) - q;
      const int c2 = (qq + 2) % q;
      // Column analogue on the transposed block: classify column group c2
      // using row group qq's step-5 labels.
      const BiAdjacency blk_t =
          blk[static_cast<std::size_t>(qq)][static_cast<std::size_t>(c2)].transpose();
      BlockCompression b = block_compress(blk_t, yt[static_cast<std::size_t>(qq)]);
      MeansResult mr = estimate_means(b, zt[static_cast<std::size_t>(c2)]);
      if (!mr.empty_classes.empty()) {
        jitter_empty_rows(mr, Rng::derive(seed, {33, t}));
        empty_events[t] = static_cast<int>(mr.empty_classes.size());
      }
      zt2[static_cast<std::size_t>(c2)] =
          lr_classify(blk_t, mr.lambda, yt[static_cast<std::size_t>(qq)],
                      Rng::derive(seed, {34, t}), 1);
    }
  });
  for (int e : empty_events) res.empty_events += e;

  if (y_true) {
    std::vector<int> part_ids;
    for (const auto& g : part_groups) part_ids.insert(part_ids.end(), g.begin(), g.end());
    res.stage.after_local_lr = mis(concat_labels(yt2, k), gather_truth(*y_true, part_ids));
  }

  // Steps 9-10: second local means on G3, then the global sum.
  std::vector<Matrix> local(static_cast<std::size_t>(q));
  std::vector<int> empty2(static_cast<std::size_t>(q), 0);
  parallel_for(static_cast<std::size_t>(q), threads, [&](std::size_t t) {
    const int qq = static_cast<int>(t);
    const int c3 = (qq + 3) % q;
    const BiAdjacency& blk_q = blk[static_cast<std::size_t>(qq)][static_cast<std::size_t>(c3)];
    BlockCompression b = block_compress(blk_q, zt2[static_cast<std::size_t>(c3)]);
    MeansResult mr = estimate_means(b, yt2[static_cast<std::size_t>(qq)]);
    if (!mr.empty_classes.empty()) {
      jitter_empty_rows(mr, Rng::derive(seed, {35, t}));
      empty2[t] = static_cast<int>(mr.empty_classes.size());
    }
    local[t] = mr.lambda.lambda;
  });
  for (int e : empty2) res.empty_events += e;
  Matrix lam_global = Matrix::Zero(k, l);
  for (const auto& lm : local) lam_global += lm;

  // Step 11: classify the other half with the global parameters and the
  // step-8 column labels over all columns.
  std::vector<int> all_cols;
  for (const auto& g : col_groups) all_cols.insert(all_cols.end(), g.begin(), g.end());
  // zt2 labels are per column group in group order, which matches the
  // column order of the submatrix built from `all_cols`.
  std::vector<int> z_all;
  z_all.reserve(all_cols.size());
  for (int g = 0; g < q; ++g)
    z_all.insert(z_all.end(), zt2[static_cast<std::size_t>(g)].a.begin(),
                 zt2[static_cast<std::size_t>(g)].a.end());
  const BiAdjacency a_other = a.submatrix(other_ids, all_cols);
  res.labels = lr_classify(a_other, MeanParams(lam_global), HardLabels(std::move(z_all), l),
                           Rng::derive(seed, 36), threads);
  if (y_true) res.stage.classified_half = mis(res.labels, gather_truth(*y_true, other_ids));
  return res;
}

// Full row pipeline (steps 1-13): two half passes sharing one partition
// plan; returns labels for all n rows in original order.
inline HardLabels row_pipeline(const BiAdjacency& a, int k, int l, const SpectralConfig& cfg,
                               std::uint64_t seed, const PartitionPlan& plan,
                               const HardLabels* y_true, int threads, StageMis* stage1,
                               StageMis* stage2, int* cyclic_bad, int* empty_events,
                               std::vector<HardLabels>* step5_rows,
                               std::vector<HardLabels>* step5_cols) {
  // Pass 1: partition the bottom half, classify the top half.
  HalfPassResult p1 = half_pass(a, k, l, cfg, Rng::derive(seed, 1), plan.bottom_groups,
                                plan.col_groups, plan.top_rows, nullptr, y_true, threads);
  // Pass 2: partition the top half, classify the bottom half; the fused
  // step-5 labels are matched to the pass-1 output on the top rows.
  std::vector<int> anchor_vec(static_cast<std::size_t>(a.rows()), 0);
  for (std::size_t i = 0; i < p1.ids.size(); ++i)
    anchor_vec[static_cast<std::size_t>(p1.ids[i])] = p1.labels.a[i];
  const HardLabels anchor(std::move(anchor_vec), k);
  HalfPassResult p2 = half_pass(a, k, l, cfg, Rng::derive(seed, 2), plan.top_groups,
                                plan.col_groups, plan.bottom_rows, &anchor, y_true, threads);
  if (stage1) *stage1 = p1.stage;
  if (stage2) *stage2 = p2.stage;
  if (cyclic_bad) *cyclic_bad += p1.cyclic_bad + p2.cyclic_bad;
  if (empty_events) *empty_events += p1.empty_events + p2.empty_events;
  if (step5_rows) *step5_rows = p1.fused_rows;
  if (step5_cols) *step5_cols = p1.fused_cols;
  std::vector<int> out(static_cast<std::size_t>(a.rows()), 0);
  for (std::size_t i = 0; i < p1.ids.size(); ++i)
    out[static_cast<std::size_t>(p1.ids[i])] = p1.labels.a[i];
  for (std::size_t i = 0; i < p2.ids.size(); ++i)
    out[static_cast<std::size_t>(p2.ids[i])] = p2.labels.a[i];
  return HardLabels(std::move(out), k);
}

}  // namespace detail

// Algorithm 3: provable, parallelizable biclustering. Runs the row pipeline
// on A and the transpose pass on A^T for the column labels. Deterministic
// given (A, seed); per-stage misclassification recorded when truth is given.
inline std::pair<HardLabels, HardLabels> provable_fit(const BiAdjacency& a, int k, int l,
                                                      const SpectralConfig& cfg,
                                                      std::uint64_t seed,
                                                      ProvableReport* report = nullptr,
                                                      const ProvableOptions& opts = {}) {
  const int q = 4;
  const PartitionPlan plan_rows = make_partition(a.rows(), a.cols(), q, Rng::derive(seed, 101));
  const PartitionPlan plan_cols = make_partition(a.cols(), a.rows(), q, Rng::derive(seed, 102));
  ProvableReport local_report;
  ProvableReport& rep = report ? *report : local_report;
  rep.plan = plan_rows;

  const HardLabels y_hat = detail::row_pipeline(
      a, k, l, cfg, Rng::derive(seed, 201), plan_rows, opts.y_true, opts.threads, &rep.pass1,
      &rep.pass2, &rep.cyclic_inconsistencies, &rep.empty_class_events, &rep.step5_row_labels,
      &rep.step5_col_labels);

  const BiAdjacency at = a.transpose();
  const HardLabels z_hat =
      detail::row_pipeline(at, l, k, cfg, Rng::derive(seed, 202), plan_cols, opts.z_true,
                           opts.threads, nullptr, nullptr, &rep.cyclic_inconsistencies,
                           &rep.empty_class_events, nullptr, nullptr);

  if (opts.y_true) rep.final_row_mis = mis(y_hat, *opts.y_true);
  if (opts.z_true) rep.final_col_mis = mis(z_hat, *opts.z_true);
  if (rep.cyclic_inconsistencies > 0)
    rep.warnings.push_back("fusion: nonidentity permutation around a cyclic overlap loop");
  return {y_hat, z_hat};
}

// Oracle classifier: the LR classifier given the true column labels and true
// mean parameters. The column oracle uses (y, Gamma) on A^T.
inline HardLabels oracle_classify(const BiAdjacency& a, const HardLabels& z_true,
                                  const MeanParams& lambda_true, std::uint64_t seed = 0,
                                  int threads = 1) {
  return lr_classify(a, lambda_true, z_true, seed, threads);
}

}  // namespace bisbm
