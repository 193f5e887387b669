// Command-line surface for the biclustering toolkit: data generation,
// fitting, evaluation, and the simulation benchmark harness.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bisbm/bench.hpp"
#include "bisbm/info.hpp"
#include "bisbm/io.hpp"
#include "bisbm/metrics.hpp"
#include "bisbm/model.hpp"
#include "bisbm/parallel.hpp"

namespace fs = std::filesystem;
using namespace bisbm;

namespace {

struct GenerateArgs {
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  std::string mode = "bernoulli";
};

struct FitArgs {
  std::string algo, edges_path, meta_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct EvalArgs {
  std::string pred_path, truth_path, out_path;
};

struct BenchArgs {
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
};

Json meta_for_instance(const Connectivity& p, const MeanParams& lambda, const MeanParams& gamma,
                       std::int64_t n, std::int64_t m, std::uint64_t seed, const std::string& mode,
                       const Json& config_echo) {
  Json meta = connectivity_to_json(p);
  meta["version"] = kVersion;
  meta["n"] = n;
  meta["m"] = m;
  meta["lambda"] = matrix_row_major(lambda.lambda);
  meta["gamma"] = matrix_row_major(gamma.lambda);
  meta["seed"] = seed;
  meta["mode"] = mode;
  meta["edges"] = "edges.tsv";
  meta["y_labels"] = "y.labels";
  meta["z_labels"] = "z.labels";
  meta["config"] = config_echo;
  return meta;
}

int cmd_generate(const GenerateArgs& args) {
  const Json cfg = read_json_file(args.config_path);
  const SbmMode mode = args.mode == "poisson" ? SbmMode::Poisson : SbmMode::Bernoulli;
  if (args.mode != "poisson" && args.mode != "bernoulli")
    throw ConfigError("mode must be bernoulli or poisson");

  Connectivity p;
  HardLabels y, z;
  if (cfg.contains("b_matrix")) {
    BenchConfig bc = BenchConfig::from_json(
        [&] {
          Json j = cfg;
          if (!j.contains("n0_grid")) j["n0_grid"] = Json::array({cfg.value("n0", 0)});
          return j;
        }());
    const int n0 = cfg.contains("n0") ? cfg["n0"].get<int>() : bc.n0_grid.at(0);
    if (n0 < 1) throw ConfigError("generate: n0 must be >= 1");
    p = bench_connectivity(bc, n0);
    const std::size_t n = static_cast<std::size_t>(bc.k()) * static_cast<std::size_t>(n0);
    const std::size_t m = static_cast<std::size_t>(bc.l()) * static_cast<std::size_t>(n0);
    y = bc.pi_y.empty() ? balanced_labels(n, bc.k()) : labels_from_proportions(n, bc.pi_y);
    z = bc.pi_z.empty() ? balanced_labels(m, bc.l()) : labels_from_proportions(m, bc.pi_z);
  } else {
    p = connectivity_from_json(cfg);
    if (!cfg.contains("n") || !cfg.contains("m"))
      throw ConfigError("generate: direct config needs n and m");
    const std::size_t n = cfg["n"].get<std::size_t>();
    const std::size_t m = cfg["m"].get<std::size_t>();
    y = cfg.contains("pi_y") ? labels_from_proportions(n, cfg["pi_y"].get<std::vector<double>>())
                             : balanced_labels(n, p.k());
    z = cfg.contains("pi_z") ? labels_from_proportions(m, cfg["pi_z"].get<std::vector<double>>())
                             : balanced_labels(m, p.l());
  }

  const MeanParams lambda = true_mean_params(p, z);
  const MeanParams gamma = column_mean_params(p, y);
  const BiAdjacency a = sample_sbm(p, y, z, args.seed, mode);

  fs::create_directories(args.out_dir);
  write_edge_list((fs::path(args.out_dir) / "edges.tsv").string(), a);
  write_labels((fs::path(args.out_dir) / "y.labels").string(), y);
  write_labels((fs::path(args.out_dir) / "z.labels").string(), z);
  write_json_file((fs::path(args.out_dir) / "meta.json").string(),
                  meta_for_instance(p, lambda, gamma, a.rows(), a.cols(), args.seed, args.mode, cfg));
  std::cout << "generated n=" << a.rows() << " m=" << a.cols() << " edges=" << a.nnz() << " in "
            << args.out_dir << "\n";
  return 0;
}

int cmd_fit(const FitArgs& args) {
  const Json meta = read_json_file(args.meta_path);
  const fs::path meta_dir = fs::path(args.meta_path).parent_path();
  const std::int64_t n = meta.at("n").get<std::int64_t>();
  const std::int64_t m = meta.at("m").get<std::int64_t>();
  const int k = meta.at("K").get<int>();
  const int l = meta.at("L").get<int>();
  const std::string edges =
      args.edges_path.empty() ? (meta_dir / meta.at("edges").get<std::string>()).string()
                              : args.edges_path;
  const BiAdjacency a = read_edge_list(edges, n, m);

  HardLabels y_true, z_true;
  MeanParams lambda_true, gamma_true;
  const HardLabels* yt = nullptr;
  const HardLabels* zt = nullptr;
  const MeanParams* lt = nullptr;
  const MeanParams* gt = nullptr;
  if (meta.contains("y_labels") && meta.contains("lambda")) {
    try {
      y_true = read_labels((meta_dir / meta.at("y_labels").get<std::string>()).string(), k);
      z_true = read_labels((meta_dir / meta.at("z_labels").get<std::string>()).string(), l);
      lambda_true = MeanParams(matrix_from_row_major(meta.at("lambda"), k, l, "lambda"));
      gamma_true = MeanParams(matrix_from_row_major(meta.at("gamma"), l, k, "gamma"));
      yt = &y_true;
      zt = &z_true;
      lt = &lambda_true;
      gt = &gamma_true;
    } catch (const DataError&) {
      if (args.algo == "oracle") throw;
    }
  } else if (args.algo == "oracle") {
    throw ConfigError("oracle requires the truth sidecar (labels and mean parameters)");
  }

  const FitOutput out = fit_algorithm(args.algo, a, k, l, args.seed, args.threads, yt, zt, lt, gt);

  fs::create_directories(args.out_dir);
  write_labels((fs::path(args.out_dir) / "y_hat.labels").string(), out.y);
  write_labels((fs::path(args.out_dir) / "z_hat.labels").string(), out.z);
  Json report;
  report["version"] = kVersion;
  report["algorithm"] = args.algo;
  report["seed"] = args.seed;
  report["threads"] = args.threads;
  report["seconds"] = out.seconds;
  report["stages"] = out.stages;
  report["edges"] = edges;
  write_json_file((fs::path(args.out_dir) / "report.json").string(), report);
  std::cout << "fit " << args.algo << " done in " << out.seconds << "s; labels in "
            << args.out_dir << "\n";
  return 0;
}

int cmd_eval(const EvalArgs& args) {
  const HardLabels pred = read_labels(args.pred_path);
  const HardLabels truth = read_labels(args.truth_path);
  if (pred.size() != truth.size()) throw DataError("eval: label files have different lengths");
  Json out;
  out["version"] = kVersion;
  out["mis"] = mis(pred, truth);
  out["mis_k"] = mis_per_class(pred, truth);
  out["dmis"] = dmis(pred, truth);
  out["nmi"] = nmi(pred, truth);
  out["permutation"] = optimal_permutation(pred, truth);
  out["nmi_normalization"] = "sqrt";
  if (!args.out_path.empty())
    write_json_file(args.out_path, out);
  else
    std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_bench(const BenchArgs& args) {
  if (!args.seed_set)
    throw ConfigError("bench requires --seed (runs are never wall-clock seeded)");
  const BenchConfig cfg = BenchConfig::from_json(read_json_file(args.config_path));
  const BenchResult res = run_bench(cfg, args.seed, args.threads);
  fs::create_directories(args.out_dir);
  auto write_text = [](const fs::path& p, const std::string& s) {
    std::ofstream f(p);
    if (!f) throw DataError("cannot open for writing: " + p.string());
    f << s;
  };
  write_text(fs::path(args.out_dir) / "results.csv", results_csv(res));
  write_text(fs::path(args.out_dir) / "summary.csv", summary_csv(res));
  write_text(fs::path(args.out_dir) / "timings.csv", timings_csv(res));
  Json meta;
  meta["version"] = kVersion;
  meta["seed"] = args.seed;
  meta["threads"] = args.threads;
  meta["config"] = cfg.to_json();
  write_json_file((fs::path(args.out_dir) / "bench_meta.json").string(), meta);
  std::cout << "bench wrote " << res.rows.size() << " rows to " << args.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bisbm: biclustering toolkit for bipartite block models"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* sc_gen = app.add_subcommand("generate", "sample a model instance to files");
  sc_gen->add_option("--config", gen.config_path, "model config JSON")->required();
  sc_gen->add_option("--out", gen.out_dir, "output directory")->required();
  sc_gen->add_option("--seed", gen.seed, "RNG seed")->required();
  sc_gen->add_option("--mode", gen.mode, "bernoulli|poisson");

  FitArgs fit;
  auto* sc_fit = app.add_subcommand("fit", "fit labels with a chosen algorithm");
  sc_fit->add_option("--algo", fit.algo, "spectral|soft|hard|oracle|provable")->required();
  sc_fit->add_option("--meta", fit.meta_path, "instance meta.json")->required();
  sc_fit->add_option("--edges", fit.edges_path, "edge list (default: from meta)");
  sc_fit->add_option("--out", fit.out_dir, "output directory")->required();
  sc_fit->add_option("--seed", fit.seed, "RNG seed")->required();
  sc_fit->add_option("--threads", fit.threads, "worker threads");

  EvalArgs ev;
  auto* sc_eval = app.add_subcommand("eval", "compare predicted labels against truth");
  sc_eval->add_option("--pred", ev.pred_path, "predicted label file")->required();
  sc_eval->add_option("--truth", ev.truth_path, "true label file")->required();
  sc_eval->add_option("--out", ev.out_path, "write JSON here instead of stdout");

  BenchArgs bench;
  auto* sc_bench = app.add_subcommand("bench", "run the simulation benchmark grid");
  sc_bench->add_option("--config", bench.config_path, "bench config JSON")->required();
  sc_bench->add_option("--out", bench.out_dir, "output directory")->required();
  auto* seed_opt = sc_bench->add_option("--seed", bench.seed, "master seed (required)");
  sc_bench->add_option("--threads", bench.threads, "worker threads");

  try {
    app.parse(argc, argv);
    bench.seed_set = seed_opt->count() > 0;
    if (sc_gen->parsed()) return cmd_generate(gen);
    if (sc_fit->parsed()) return cmd_fit(fit);
    if (sc_eval->parsed()) return cmd_eval(ev);
    if (sc_bench->parsed()) return cmd_bench(bench);
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
