#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bisbm/adjacency.hpp"
#include "bisbm/common.hpp"
#include "bisbm/info.hpp"
#include "bisbm/io.hpp"
#include "bisbm/labels.hpp"
#include "bisbm/metrics.hpp"
#include "bisbm/model.hpp"
#include "bisbm/parallel.hpp"
#include "bisbm/pl_ops.hpp"
#include "bisbm/provable.hpp"
#include "bisbm/spectral.hpp"

namespace bisbm {

// ---------------------------------------------------------------------------
// Small statistics helpers used by the harness and its acceptance checks.

inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double idx = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(idx));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(idx));
  const double frac = idx - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// One-sided paired sign test: p-value for H1 "first > second" given `wins`
// strict wins out of `trials` non-tied pairs, P(X >= wins), X ~ Bin(n, 1/2).
inline double sign_test_p(int wins, int trials) {
  if (trials <= 0) return 1.0;
  double p = 0.0;
  for (int k = wins; k <= trials; ++k) {
    const double logc = std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) -
                        std::lgamma(trials - k + 1.0) - trials * std::log(2.0);
    p += std::exp(logc);
  }
  return std::min(p, 1.0);
}

inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return den > 0.0 ? num / den : 0.0;
}

// ---------------------------------------------------------------------------
// Model generation for the simulation study.

struct BenchConfig {
  Matrix b_matrix;
  double c = 1.0;
  double alpha_exp = 0.75;
  std::vector<int> n0_grid;
  int seeds = 30;
  std::vector<std::string> algorithms{"spectral", "soft", "hard", "oracle"};
  std::vector<double> pi_y, pi_z;  // optional unbalanced proportions
  SbmMode mode = SbmMode::Bernoulli;

  int k() const { return static_cast<int>(b_matrix.rows()); }
  int l() const { return static_cast<int>(b_matrix.cols()); }

  void validate() const {
    if (b_matrix.rows() < 1 || b_matrix.cols() < 1) throw ConfigError("bench: b_matrix required");
    if (n0_grid.empty()) throw ConfigError("bench: n0_grid must be nonempty");
    if (c <= 0.0) throw ConfigError("bench: c must be > 0");
    if (alpha_exp < 0.0) throw ConfigError("bench: alpha_exp must be >= 0");
    if (seeds < 1) throw ConfigError("bench: seeds must be >= 1");
    if (!pi_y.empty() && static_cast<int>(pi_y.size()) != k())
      throw ConfigError("bench: pi_y length != K");
    if (!pi_z.empty() && static_cast<int>(pi_z.size()) != l())
      throw ConfigError("bench: pi_z length != L");
    for (const auto& a : algorithms)
      if (a != "spectral" && a != "soft" && a != "hard" && a != "oracle" && a != "provable")
        throw ConfigError("bench: unknown algorithm '" + a + "'");
  }

  static BenchConfig from_json(const Json& j) {
    BenchConfig cfg;
    if (!j.contains("b_matrix")) throw ConfigError("bench config: b_matrix missing");
    const auto& bm = j["b_matrix"];
    if (!bm.is_array() || bm.empty() || !bm[0].is_array())
      throw ConfigError("bench config: b_matrix must be an array of rows");
    const int k = static_cast<int>(bm.size());
    const int l = static_cast<int>(bm[0].size());
    cfg.b_matrix = Matrix(k, l);
    for (int a = 0; a < k; ++a) {
      if (static_cast<int>(bm[static_cast<std::size_t>(a)].size()) != l)
        throw ConfigError("bench config: ragged b_matrix");
      for (int b = 0; b < l; ++b)
        cfg.b_matrix(a, b) = bm[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)].get<double>();
    }
    cfg.c = j.value("c", 1.0);
    cfg.alpha_exp = j.value("alpha_exp", 0.75);
    if (j.contains("n0_grid")) cfg.n0_grid = j["n0_grid"].get<std::vector<int>>();
    cfg.seeds = j.value("seeds", 30);
    if (j.contains("algorithms")) cfg.algorithms = j["algorithms"].get<std::vector<std::string>>();
    if (j.contains("pi_y")) cfg.pi_y = j["pi_y"].get<std::vector<double>>();
    if (j.contains("pi_z")) cfg.pi_z = j["pi_z"].get<std::vector<double>>();
    if (j.contains("mode")) {
      const std::string m = j["mode"].get<std::string>();
      if (m == "bernoulli")
        cfg.mode = SbmMode::Bernoulli;
      else if (m == "poisson")
        cfg.mode = SbmMode::Poisson;
      else
        throw ConfigError("bench config: mode must be bernoulli or poisson");
    }
    cfg.validate();
    return cfg;
  }

  Json to_json() const {
    Json j;
    std::vector<std::vector<double>> bm;
    for (int a = 0; a < k(); ++a) {
      std::vector<double> row;
      for (int b = 0; b < l(); ++b) row.push_back(b_matrix(a, b));
      bm.push_back(row);
    }
    j["b_matrix"] = bm;
    j["c"] = c;
    j["alpha_exp"] = alpha_exp;
    j["n0_grid"] = n0_grid;
    j["seeds"] = seeds;
    j["algorithms"] = algorithms;
    if (!pi_y.empty()) j["pi_y"] = pi_y;
    if (!pi_z.empty()) j["pi_z"] = pi_z;
    j["mode"] = mode == SbmMode::Bernoulli ? "bernoulli" : "poisson";
    return j;
  }
};

// P = C [log(mn)]^alpha / sqrt(mn) * B with n = K n0, m = L n0.
inline Connectivity bench_connectivity(const BenchConfig& cfg, int n0) {
  const double n = static_cast<double>(cfg.k()) * n0;
  const double m = static_cast<double>(cfg.l()) * n0;
  const double scale = cfg.c * std::pow(std::log(n * m), cfg.alpha_exp) / std::sqrt(n * m);
  Matrix p = scale * cfg.b_matrix;
  if (p.maxCoeff() > 1.0)
    throw ConfigError("bench: P entry exceeds 1 (C too large for this n0)");
  if (p.minCoeff() < 0.0) throw ConfigError("bench: negative P entry");
  return Connectivity(std::move(p));
}

struct Instance {
  BiAdjacency a;
  HardLabels y, z;
  Connectivity p;
  MeanParams lambda, gamma;
};

inline Instance make_instance(const BenchConfig& cfg, int n0, std::uint64_t seed,
                              int threads = 1) {
  Instance ins;
  ins.p = bench_connectivity(cfg, n0);
  const std::size_t n = static_cast<std::size_t>(cfg.k()) * static_cast<std::size_t>(n0);
  const std::size_t m = static_cast<std::size_t>(cfg.l()) * static_cast<std::size_t>(n0);
  ins.y = cfg.pi_y.empty() ? balanced_labels(n, cfg.k()) : labels_from_proportions(n, cfg.pi_y);
  ins.z = cfg.pi_z.empty() ? balanced_labels(m, cfg.l()) : labels_from_proportions(m, cfg.pi_z);
  ins.lambda = true_mean_params(ins.p, ins.z);
  ins.gamma = column_mean_params(ins.p, ins.y);
  ins.a = sample_sbm(ins.p, ins.y, ins.z, seed, cfg.mode, threads);
  return ins;
}

// ---------------------------------------------------------------------------
// Algorithm dispatch shared by the CLI and the bench harness.

struct FitOutput {
  HardLabels y, z;
  double seconds = 0.0;
  Json stages;  // wall-clock per stage and any algorithm-specific notes
};

namespace detail {

inline double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

}  // namespace detail

inline std::pair<HardLabels, HardLabels> spectral_both(const BiAdjacency& a, int k, int l,
                                                       std::uint64_t seed, int threads) {
  SpectralConfig cfg;
  cfg.seed = Rng::derive(seed, 1);
  cfg.threads = threads;
  HardLabels rows = spectral_cluster_rows(a, k, l, cfg);
  cfg.seed = Rng::derive(seed, 2);
  HardLabels cols = spectral_cluster_cols(a, k, l, cfg);
  return {std::move(rows), std::move(cols)};
}

// algorithm in {spectral, soft, hard, oracle, provable}. Oracle and provable
// stage reports require truth; oracle throws without it.
inline FitOutput fit_algorithm(const std::string& algorithm, const BiAdjacency& a, int k, int l,
                               std::uint64_t seed, int threads, const HardLabels* y_true = nullptr,
                               const HardLabels* z_true = nullptr,
                               const MeanParams* lambda_true = nullptr,
                               const MeanParams* gamma_true = nullptr) {
  FitOutput out;
  const double t0 = detail::now_seconds();
  if (algorithm == "spectral") {
    auto [rows, cols] = spectral_both(a, k, l, Rng::derive(seed, 11), threads);
    out.y = std::move(rows);
    out.z = std::move(cols);
    out.stages["spectral_seconds"] = detail::now_seconds() - t0;
  } else if (algorithm == "soft" || algorithm == "hard") {
    auto [rows, cols] = spectral_both(a, k, l, Rng::derive(seed, 11), threads);
    const double t1 = detail::now_seconds();
    out.stages["spectral_seconds"] = t1 - t0;
    PLOptions opts;
    opts.prior = PriorMode::kFlat;
    opts.inner = InnerLoop::kOnce;
    opts.hardening = algorithm == "soft" ? Hardening::kKeepSoft : Hardening::kEachStep;
    opts.seed = Rng::derive(seed, 12);
    opts.threads = threads;
    PLResult res = pl_meta(a, rows, cols, opts);
    out.y = std::move(res.y);
    out.z = std::move(res.z);
    out.stages["em_seconds"] = detail::now_seconds() - t1;
    out.stages["em_outer_iterations"] = static_cast<int>(res.trace.iters.size());
    out.stages["em_converged"] = res.trace.converged;
  } else if (algorithm == "oracle") {
    if (!y_true || !z_true || !lambda_true || !gamma_true)
      throw ConfigError("oracle requires the truth sidecar (labels and mean parameters)");
    out.y = oracle_classify(a, *z_true, *lambda_true, Rng::derive(seed, 13), threads);
    out.z = oracle_classify(a.transpose(), *y_true, *gamma_true, Rng::derive(seed, 14), threads);
    out.stages["oracle_seconds"] = detail::now_seconds() - t0;
  } else if (algorithm == "provable") {
    SpectralConfig cfg;
    cfg.threads = 1;
    ProvableOptions popts;
    popts.threads = threads;
    popts.y_true = y_true;
    popts.z_true = z_true;
    ProvableReport rep;
    auto [rows, cols] = provable_fit(a, k, l, cfg, Rng::derive(seed, 15), &rep, popts);
    out.y = std::move(rows);
    out.z = std::move(cols);
    out.stages["provable_seconds"] = detail::now_seconds() - t0;
    out.stages["cyclic_inconsistencies"] = rep.cyclic_inconsistencies;
    if (rep.pass1.fused_spectral >= 0.0) {
      out.stages["pass1_mis_fused_spectral"] = rep.pass1.fused_spectral;
      out.stages["pass1_mis_after_local_lr"] = rep.pass1.after_local_lr;
      out.stages["pass1_mis_classified_half"] = rep.pass1.classified_half;
    }
  } else {
    throw ConfigError("unknown algorithm: " + algorithm);
  }
  out.seconds = detail::now_seconds() - t0;
  return out;
}

// ---------------------------------------------------------------------------
// Bench harness: one row per (n0, seed, algorithm) cell.

struct BenchRow {
  int n0 = 0;
  int seed_idx = 0;
  std::string algorithm;
  bool ok = true;
  std::string error;
  double nmi_row = 0, nmi_col = 0, nmi_overall = 0;
  double mis_row = 0, mis_col = 0, mis_overall = 0;
  double pred_mis_row = -1.0;  // oracle rate overlay; -1 when not applicable
  double seconds = 0.0;
};

// NMI of the disjoint union of the two sides (column classes offset by K).
inline double nmi_overall_of(const HardLabels& y_hat, const HardLabels& y, const HardLabels& z_hat,
                             const HardLabels& z) {
  std::vector<int> pred, truth;
  pred.reserve(y.size() + z.size());
  truth.reserve(y.size() + z.size());
  const int k = y.num_classes;
  for (std::size_t i = 0; i < y.size(); ++i) {
    pred.push_back(y_hat.a[i]);
    truth.push_back(y.a[i]);
  }
  for (std::size_t j = 0; j < z.size(); ++j) {
    pred.push_back(z_hat.a[j] + k);
    truth.push_back(z.a[j] + k);
  }
  const int classes = k + z.num_classes;
  return nmi(HardLabels(std::move(pred), classes), HardLabels(std::move(truth), classes));
}

struct BenchResult {
  std::vector<BenchRow> rows;
  BenchConfig config;
  std::uint64_t master_seed = 0;
};

inline BenchResult run_bench(const BenchConfig& cfg, std::uint64_t master_seed, int threads) {
  cfg.validate();
  BenchResult result;
  result.config = cfg;
  result.master_seed = master_seed;
  struct Cell {
    int n0_idx, seed_idx;
  };
  std::vector<Cell> cells;
  for (int i = 0; i < static_cast<int>(cfg.n0_grid.size()); ++i)
    for (int s = 0; s < cfg.seeds; ++s) cells.push_back({i, s});
  std::vector<std::vector<BenchRow>> per_cell(cells.size());
  parallel_for(cells.size(), threads, [&](std::size_t t) {
    const auto [n0_idx, seed_idx] = cells[t];
    const int n0 = cfg.n0_grid[static_cast<std::size_t>(n0_idx)];
    const std::uint64_t cell_seed = Rng::derive(master_seed, {7001, static_cast<std::uint64_t>(n0),
                                                              static_cast<std::uint64_t>(seed_idx)});
    Instance ins = make_instance(cfg, n0, Rng::derive(cell_seed, 1), 1);
    double pred = -1.0;
    auto& rows_out = per_cell[t];
    for (std::size_t ai = 0; ai < cfg.algorithms.size(); ++ai) {
      const std::string& algo = cfg.algorithms[ai];
      BenchRow row;
      row.n0 = n0;
      row.seed_idx = seed_idx;
      row.algorithm = algo;
      try {
        const FitOutput fo =
            fit_algorithm(algo, ins.a, cfg.k(), cfg.l(), Rng::derive(cell_seed, {2, ai + 1}), 1,
                          &ins.y, &ins.z, &ins.lambda, &ins.gamma);
        row.nmi_row = nmi(fo.y, ins.y);
        row.nmi_col = nmi(fo.z, ins.z);
        row.nmi_overall = nmi_overall_of(fo.y, ins.y, fo.z, ins.z);
        row.mis_row = mis(fo.y, ins.y);
        row.mis_col = mis(fo.z, ins.z);
        const double n = static_cast<double>(ins.y.size());
        const double m = static_cast<double>(ins.z.size());
        row.mis_overall = (n * row.mis_row + m * row.mis_col) / (n + m);
        row.seconds = fo.seconds;
        if (algo == "oracle") {
          if (pred < 0.0) {
            const InfoMatrix im = chernoff_info(ins.lambda);
            const auto pi = ins.y.proportions();
            pred = 0.0;
            for (int c = 0; c < cfg.k(); ++c)
              pred += pi[static_cast<std::size_t>(c)] * rate_prediction(im, ins.lambda.min(), c);
          }
          row.pred_mis_row = pred;
        }
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
      rows_out.push_back(std::move(row));
    }
  });
  for (auto& v : per_cell)
    for (auto& r : v) result.rows.push_back(std::move(r));
  return result;
}

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(12);
  ss << v;
  return ss.str();
}

// Degenerate values are encoded as explicit sentinel strings, never NaN/inf
// literals from the formatter.
inline std::string fmt_log(double v) {
  if (v <= 0.0) return "-inf";
  return fmt(std::log(v));
}

inline std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

}  // namespace detail

// Deterministic results CSV (excludes wall-clock; see timings_csv).
inline std::string results_csv(const BenchResult& res) {
  std::ostringstream out;
  out << "n0,seed,algorithm,status,nmi_row,nmi_col,nmi_overall,mis_row,mis_col,log_mis,"
         "pred_mis_row\n";
  for (const auto& r : res.rows) {
    out << r.n0 << ',' << r.seed_idx << ',' << r.algorithm << ',';
    if (!r.ok) {
      out << "error:" << detail::sanitize(r.error) << ",,,,,,,\n";
      continue;
    }
    out << "ok," << detail::fmt(r.nmi_row) << ',' << detail::fmt(r.nmi_col) << ','
        << detail::fmt(r.nmi_overall) << ',' << detail::fmt(r.mis_row) << ','
        << detail::fmt(r.mis_col) << ',' << detail::fmt_log(r.mis_overall) << ','
        << (r.pred_mis_row >= 0.0 ? detail::fmt(r.pred_mis_row) : std::string()) << '\n';
  }
  return out.str();
}

inline std::string timings_csv(const BenchResult& res) {
  std::ostringstream out;
  out << "n0,seed,algorithm,seconds\n";
  for (const auto& r : res.rows)
    out << r.n0 << ',' << r.seed_idx << ',' << r.algorithm << ',' << detail::fmt(r.seconds)
        << '\n';
  return out.str();
}

// Per-(n0, algorithm) medians and quartiles plus means.
inline std::string summary_csv(const BenchResult& res) {
  std::ostringstream out;
  out << "n0,algorithm,cells,nmi_overall_median,nmi_overall_q1,nmi_overall_q3,"
         "mis_overall_median,mis_overall_q1,mis_overall_q3,nmi_overall_mean,mis_overall_mean\n";
  for (int n0 : res.config.n0_grid) {
    for (const auto& algo : res.config.algorithms) {
      std::vector<double> nmis, miss;
      for (const auto& r : res.rows) {
        if (r.n0 != n0 || r.algorithm != algo || !r.ok) continue;
        nmis.push_back(r.nmi_overall);
        miss.push_back(r.mis_overall);
      }
      if (nmis.empty()) continue;
      std::vector<double> sn = nmis, sm = miss;
      std::sort(sn.begin(), sn.end());
      std::sort(sm.begin(), sm.end());
      out << n0 << ',' << algo << ',' << nmis.size() << ',' << detail::fmt(quantile_sorted(sn, 0.5))
          << ',' << detail::fmt(quantile_sorted(sn, 0.25)) << ','
          << detail::fmt(quantile_sorted(sn, 0.75)) << ',' << detail::fmt(quantile_sorted(sm, 0.5))
          << ',' << detail::fmt(quantile_sorted(sm, 0.25)) << ','
          << detail::fmt(quantile_sorted(sm, 0.75)) << ',' << detail::fmt(mean(nmis)) << ','
          << detail::fmt(mean(miss)) << '\n';
    }
  }
  return out.str();
}

// Figure-2 connectivity pattern (4 x 6) and the wide appendix variant.
inline Matrix figure2_pattern() {
  Matrix b(4, 6);
  b << 1, 2, 3, 4, 5, 6,
       2, 3, 4, 5, 6, 1,
       3, 4, 5, 6, 1, 2,
       4, 5, 6, 1, 2, 3;
  return b;
}

inline Matrix wide_pattern_4x12() {
  Matrix b(4, 12);
  b << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12,
       4, 5, 6, 7, 8, 9, 10, 11, 12, 1, 2, 3,
       7, 8, 9, 10, 11, 12, 1, 2, 3, 4, 5, 6,
       10, 11, 12, 1, 2, 3, 4, 5, 6, 7, 8, 9;
  return b;
}

}  // namespace bisbm
