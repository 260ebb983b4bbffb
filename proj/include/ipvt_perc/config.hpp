#pragma once

// Flat key=value experiment configuration.
//
// Grammar: whitespace-separated key=value tokens, any number per line; '#'
// starts a comment running to end of line. Recognized keys:
//
//   estimator   required; one of the names listed by estimator_names_joined()
//   d, k        required; tree degree and product arity
//   lambda, p   comma lists of reals
//   R, replicas, levels, sub_radius, bootstrap, r_wall, wall_pairs,
//   core_radius, K        integers
//   seed        unsigned integer
//   theta0      real; defaults to (d-2)/(d-1)
//   out_dir     output directory (no whitespace)
//   eval_radii  comma list of integers
//   pairs       semicolon list of u:v vertex pairs, coordinate words
//               comma-joined inside each vertex, '-' for the root word
//
// Unknown keys, duplicates, malformed numbers, and out-of-range scalars throw
// std::invalid_argument naming the key and its 1-based line. Cross-key
// constraints are enforced by validate_config and name the offending key.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ipvt_perc/experiments.hpp"
#include "ipvt_perc/horofunction.hpp"
#include "ipvt_perc/tree_graph.hpp"

namespace ipvt_perc {

namespace detail {

struct ConfigEntry {
  std::string value;
  int line = 0;
};

[[noreturn]] inline void config_fail(const std::string& key, int line, const std::string& what) {
  throw std::invalid_argument("config error at line " + std::to_string(line) + ": key '" + key +
                              "': " + what);
}

inline long long config_int(const std::string& key, const ConfigEntry& e, long long lo,
                            long long hi) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (ec != std::errc() || ptr != e.value.data() + e.value.size())
    config_fail(key, e.line, "malformed integer '" + e.value + "'");
  if (v < lo || v > hi)
    config_fail(key, e.line,
                "value " + e.value + " out of range [" + std::to_string(lo) + "," +
                    std::to_string(hi) + "]");
  return v;
}

inline std::uint64_t config_u64(const std::string& key, const ConfigEntry& e) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (ec != std::errc() || ptr != e.value.data() + e.value.size())
    config_fail(key, e.line, "malformed unsigned integer '" + e.value + "'");
  return v;
}

inline double config_real(const std::string& key, int line, std::string_view text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    config_fail(key, line, "malformed number '" + std::string(text) + "'");
  return v;
}

template <typename Fn>
void config_split(const std::string& key, const ConfigEntry& e, char sep, Fn&& fn) {
  std::string_view rest = e.value;
  while (true) {
    std::size_t cut = rest.find(sep);
    std::string_view piece = cut == std::string_view::npos ? rest : rest.substr(0, cut);
    if (piece.empty()) config_fail(key, e.line, "empty list entry");
    fn(piece);
    if (cut == std::string_view::npos) break;
    rest = rest.substr(cut + 1);
  }
}

}  // namespace detail

// Parses inline config text into a validated ExperimentConfig.
inline ExperimentConfig parse_config(std::string_view text) {
  using detail::ConfigEntry;
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
    throw std::invalid_argument("config error: empty config");

  std::map<std::string, ConfigEntry> entries;
  std::istringstream lines{std::string(text)};
  std::string line;
  for (int lineNo = 1; std::getline(lines, line); ++lineNo) {
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream tokens(line);
    std::string tok;
    while (tokens >> tok) {
      std::size_t eq = tok.find('=');
      if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("config error at line " + std::to_string(lineNo) +
                                    ": malformed entry '" + tok + "' (expected key=value)");
      std::string key = tok.substr(0, eq);
      auto [it, fresh] = entries.emplace(key, ConfigEntry{tok.substr(eq + 1), lineNo});
      if (!fresh)
        detail::config_fail(key, lineNo,
                            "duplicate (first set at line " + std::to_string(it->second.line) + ")");
    }
  }

  auto take = [&entries](const char* key) -> const ConfigEntry* {
    auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  };
  auto require = [&take](const char* key) -> const ConfigEntry& {
    const ConfigEntry* e = take(key);
    if (!e) throw std::invalid_argument(std::string("config error: missing required key '") + key +
                                        "'");
    return *e;
  };

  ExperimentConfig cfg;

  // d, k, estimator resolve first: theta0's default and pair parsing need them.
  cfg.params.d = static_cast<int>(detail::config_int("d", require("d"), 3, 200));
  cfg.params.k = static_cast<int>(detail::config_int("k", require("k"), 1, 8));
  {
    const ConfigEntry& e = require("estimator");
    try {
      cfg.estimator = estimator_from_name(e.value);
    } catch (const std::invalid_argument& ex) {
      detail::config_fail("estimator", e.line, ex.what());
    }
  }

  std::vector<std::string> known = {"d", "k", "estimator"};
  auto scalar = [&known, &take](const char* key) -> const ConfigEntry* {
    known.push_back(key);
    return take(key);
  };

  if (const ConfigEntry* e = scalar("lambda"))
    detail::config_split("lambda", *e, ',', [&](std::string_view piece) {
      double l = detail::config_real("lambda", e->line, piece);
      if (!(l > 0.0 && l <= 1.0)) detail::config_fail("lambda", e->line, "lambda must be in (0,1]");
      cfg.lambdas.push_back(l);
    });
  if (const ConfigEntry* e = scalar("p"))
    detail::config_split("p", *e, ',', [&](std::string_view piece) {
      double p = detail::config_real("p", e->line, piece);
      if (!(p >= 0.0 && p <= 1.0)) detail::config_fail("p", e->line, "p must be in [0,1]");
      cfg.ps.push_back(p);
    });
  if (const ConfigEntry* e = scalar("R")) cfg.R = static_cast<int>(detail::config_int("R", *e, 0, 64));
  if (const ConfigEntry* e = scalar("replicas"))
    cfg.replicas = static_cast<int>(detail::config_int("replicas", *e, 1, 100000000));
  if (const ConfigEntry* e = scalar("seed")) cfg.seed = detail::config_u64("seed", *e);
  if (const ConfigEntry* e = scalar("theta0")) {
    cfg.theta0 = detail::config_real("theta0", e->line, e->value);
    if (!(cfg.theta0 > 0.0)) detail::config_fail("theta0", e->line, "theta0 must be positive");
  } else {
    cfg.theta0 = default_theta0(cfg.params.d);
  }
  if (const ConfigEntry* e = scalar("out_dir")) cfg.out_dir = e->value;
  if (const ConfigEntry* e = scalar("K"))
    cfg.cell_count_k = static_cast<int>(detail::config_int("K", *e, 0, 1000000));
  if (const ConfigEntry* e = scalar("levels"))
    cfg.levels = static_cast<int>(detail::config_int("levels", *e, 2, 64));
  if (const ConfigEntry* e = scalar("sub_radius"))
    cfg.sub_radius = static_cast<int>(detail::config_int("sub_radius", *e, 0, 64));
  if (const ConfigEntry* e = scalar("bootstrap"))
    cfg.bootstrap = static_cast<int>(detail::config_int("bootstrap", *e, 1, 100000000));
  if (const ConfigEntry* e = scalar("r_wall"))
    cfg.r_wall = static_cast<int>(detail::config_int("r_wall", *e, 2, 64));
  if (const ConfigEntry* e = scalar("wall_pairs"))
    cfg.wall_pairs = static_cast<int>(detail::config_int("wall_pairs", *e, 1, 1000000));
  if (const ConfigEntry* e = scalar("core_radius"))
    cfg.core_radius = static_cast<int>(detail::config_int("core_radius", *e, 0, 64));
  if (const ConfigEntry* e = scalar("eval_radii"))
    detail::config_split("eval_radii", *e, ',', [&](std::string_view piece) {
      ConfigEntry one{std::string(piece), e->line};
      cfg.eval_radii.push_back(static_cast<int>(detail::config_int("eval_radii", one, 1, 64)));
    });
  if (const ConfigEntry* e = scalar("pairs"))
    detail::config_split("pairs", *e, ';', [&](std::string_view piece) {
      std::size_t colon = piece.find(':');
      if (colon == std::string_view::npos)
        detail::config_fail("pairs", e->line,
                            "pair '" + std::string(piece) + "' is not of the form u:v");
      try {
        cfg.pairs.emplace_back(parse_vertex(cfg.params, piece.substr(0, colon)),
                               parse_vertex(cfg.params, piece.substr(colon + 1)));
      } catch (const std::invalid_argument& ex) {
        detail::config_fail("pairs", e->line, ex.what());
      }
    });

  for (const auto& [key, entry] : entries)
    if (std::find(known.begin(), known.end(), key) == known.end())
      detail::config_fail(key, entry.line, "unknown key");

  validate_config(cfg);
  return cfg;
}

// Reads a config file and parses it.
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace ipvt_perc
