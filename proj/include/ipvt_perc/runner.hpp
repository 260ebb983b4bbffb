#pragma once

// Experiment runner: dispatches a validated config and writes the artifact
// set into cfg.out_dir:
//
//   results.csv    one row per estimate, canonical order, thread-invariant
//   summary.json   the same rows plus config echo, version, and method notes
//   manifest.json  config echo, resolved seed, UTC timestamps, file list
//
// Every file is staged under a ".partial" suffix and renamed into place only
// after all streams are complete; the manifest is renamed last, so its
// presence marks a finished run and it lists every file the run emitted
// (itself included). A failure leaves only ".partial" debris behind.

#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipvt_perc/experiments.hpp"
#include "ipvt_perc/log.hpp"
#include "ipvt_perc/version.hpp"

namespace ipvt_perc {

struct RunManifest {
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string version;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> files;  // final basenames, manifest.json included
  std::filesystem::path directory;
};

namespace detail {

inline std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

}  // namespace detail

inline nlohmann::json manifest_json(const RunManifest& m) {
  nlohmann::json j;
  j["version"] = m.version;
  j["config"] = m.config;
  j["seed"] = m.seed;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["files"] = m.files;
  return j;
}

// Runs the configured estimator and writes results.csv, summary.json, and
// manifest.json under cfg.out_dir. Estimator and filesystem errors propagate.
inline RunManifest run_to_directory(const ExperimentConfig& cfg, int threads = 1) {
  validate_config(cfg);
  RunManifest manifest;
  manifest.config = config_json(cfg);
  manifest.seed = cfg.seed;
  manifest.version = kVersion;
  manifest.directory = cfg.out_dir;
  manifest.started_at = detail::utc_timestamp();
  manifest.files = {"results.csv", "summary.json", "manifest.json"};

  IPVT_PERC_LOG_INFO("running estimator %s with %d replicas", estimator_name(cfg.estimator),
                     cfg.replicas);
  std::vector<ExperimentResult> rows = run_experiment(cfg, threads);
  manifest.finished_at = detail::utc_timestamp();

  std::filesystem::create_directories(manifest.directory);
  detail::write_file(manifest.directory / "results.csv.partial", results_csv(rows, cfg.params));
  detail::write_file(manifest.directory / "summary.json.partial",
                     summary_json(cfg, rows).dump(2) + "\n");
  detail::write_file(manifest.directory / "manifest.json.partial",
                     manifest_json(manifest).dump(2) + "\n");
  for (const std::string& name : manifest.files)
    std::filesystem::rename(manifest.directory / (name + ".partial"), manifest.directory / name);
  IPVT_PERC_LOG_INFO("wrote %zu rows to %s", rows.size(), manifest.directory.string().c_str());
  return manifest;
}

}  // namespace ipvt_perc
