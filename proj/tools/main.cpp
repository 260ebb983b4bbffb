// Command-line front end: experiment dispatch plus the exact combinatorial
// oracles, for cross-checking simulation output from scripts.
//
//   ipvt_perc simulate --config <path> [--seed N] [--threads N] [--out-dir D]
//   ipvt_perc oracle sphere-size --d D --k K --q Q [--ball]
//   ipvt_perc oracle level-measure --d D --k K --v VERTEX --m M [--theta0 T]
//
// Exit status 0 on success, 1 with a diagnostic on stderr otherwise.
// IPVT_PERC_LOG in {error,warn,info,debug} controls stderr verbosity.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "ipvt_perc/config.hpp"
#include "ipvt_perc/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Voronoi percolation on products of regular trees"};
  app.require_subcommand(1);

  std::string configPath;
  std::string outDir;
  std::uint64_t seed = 0;
  int threads = 1;
  CLI::App* sim = app.add_subcommand("simulate", "run a configured estimator");
  sim->add_option("--config", configPath, "flat key=value config file")->required();
  CLI::Option* seedOpt = sim->add_option("--seed", seed, "override the config seed");
  sim->add_option("--threads", threads, "replica worker bound")->check(CLI::Range(1, 256));
  CLI::Option* outOpt = sim->add_option("--out-dir", outDir, "override the config out_dir");

  CLI::App* oracle = app.add_subcommand("oracle", "exact combinatorial values");
  oracle->require_subcommand(1);

  int d = 3, k = 2, q = 0;
  bool ball = false;
  CLI::App* sphere = oracle->add_subcommand("sphere-size", "vertex count of a sphere or ball");
  sphere->add_option("--d", d, "tree degree")->required();
  sphere->add_option("--k", k, "product arity")->required();
  sphere->add_option("--q", q, "radius")->required()->check(CLI::Range(0, 200));
  sphere->add_flag("--ball", ball, "count the closed ball instead of the sphere");

  int ld = 3, lk = 2;
  long long m = 0;
  std::string vertexText;
  double theta0 = -1.0;
  CLI::App* level =
      oracle->add_subcommand("level-measure", "intensity of {f : f(o) <= m, f(v) <= m}");
  level->add_option("--d", ld, "tree degree")->required();
  level->add_option("--k", lk, "product arity")->required();
  level->add_option("--v", vertexText, "vertex, coordinate words comma-joined ('-' = root word)")
      ->required();
  level->add_option("--m", m, "level cap")->required();
  level->add_option("--theta0", theta0, "level-0 intensity (default (d-2)/(d-1))");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      ipvt_perc::ExperimentConfig cfg = ipvt_perc::load_config(configPath);
      if (seedOpt->count()) cfg.seed = seed;
      if (outOpt->count()) cfg.out_dir = outDir;
      ipvt_perc::RunManifest manifest = ipvt_perc::run_to_directory(cfg, threads);
      std::printf("wrote %s\n", (manifest.directory / "manifest.json").string().c_str());
      return 0;
    }
    if (sphere->parsed()) {
      ipvt_perc::TreeParams params{d, k};
      ipvt_perc::uint128 n = ball ? ipvt_perc::ball_size(params, q)
                                  : ipvt_perc::sphere_size(params, q);
      std::printf("%s\n", ipvt_perc::to_string(n).c_str());
      return 0;
    }
    if (level->parsed()) {
      ipvt_perc::TreeParams params{ld, lk};
      ipvt_perc::validate(params);
      if (theta0 < 0.0) theta0 = ipvt_perc::default_theta0(ld);
      ipvt_perc::Vertex v = ipvt_perc::parse_vertex(params, vertexText);
      std::printf("%.17g\n", ipvt_perc::level_set_measure(params, v, m, theta0));
      return 0;
    }
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 1;
}
