#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ipvt_perc/horofunction.hpp"
#include "ipvt_perc/ipvt.hpp"
#include "ipvt_perc/percolation.hpp"
#include "ipvt_perc/rng.hpp"
#include "ipvt_perc/tree_graph.hpp"
#include "ipvt_perc/version.hpp"
#include "ipvt_perc/voronoi.hpp"
#include "ipvt_perc/window.hpp"

namespace ipvt_perc {

enum class Estimator {
  LocalUniqueness,
  NeighborCompleteness,
  CellCountGeqK,
  TwoPoint,
  ThetaRatio,
  DiagramTv,
  WallGrowth,
  IpvtAdjacency,
};

inline constexpr std::pair<const char*, Estimator> kEstimatorNames[] = {
    {"local_uniqueness", Estimator::LocalUniqueness},
    {"neighbor_completeness", Estimator::NeighborCompleteness},
    {"cell_count_geq_K", Estimator::CellCountGeqK},
    {"two_point", Estimator::TwoPoint},
    {"theta_ratio", Estimator::ThetaRatio},
    {"diagram_tv", Estimator::DiagramTv},
    {"wall_growth", Estimator::WallGrowth},
    {"ipvt_adjacency", Estimator::IpvtAdjacency},
};

inline const char* estimator_name(Estimator e) {
  for (const auto& [name, val] : kEstimatorNames)
    if (val == e) return name;
  throw std::invalid_argument("unknown estimator");
}

inline std::string estimator_names_joined() {
  std::string out;
  for (const auto& [name, val] : kEstimatorNames) {
    if (!out.empty()) out += ", ";
    out += name;
  }
  return out;
}

inline Estimator estimator_from_name(const std::string& name) {
  for (const auto& [n, val] : kEstimatorNames)
    if (name == n) return val;
  throw std::invalid_argument("unknown estimator '" + name + "'; valid names: " +
                              estimator_names_joined());
}

struct ExperimentConfig {
  TreeParams params{3, 2};
  std::vector<double> lambdas;  // finite-model nucleus intensities
  std::vector<double> ps;       // cell retention probabilities
  int R = 3;
  int replicas = 200;
  std::uint64_t seed = 1;
  double theta0 = 0.5;  // ideal-model level intensity at level 0
  Estimator estimator = Estimator::LocalUniqueness;
  std::string out_dir = "out";

  // Estimator-specific knobs, ignored by estimators that do not use them.
  int cell_count_k = 3;                           // cell_count_geq_K threshold
  std::vector<std::pair<Vertex, Vertex>> pairs;   // two_point endpoints
  int levels = 6;                                 // theta_ratio level window
  int sub_radius = 1;                             // diagram_tv sub-window radius
  int bootstrap = 1000;                           // diagram_tv bootstrap resamples
  std::vector<int> eval_radii;                    // wall_growth / ipvt_adjacency windows
  int r_wall = 2;                                 // wall separation budget
  int wall_pairs = 10;                            // function pairs per wall sample
  int core_radius = 2;                            // ipvt_adjacency cell-collection ball
};

// Largest t with |B_t| <= 1/lambda; the normalization scale of the
// low-intensity regime. ball_size is an integer, so the comparison is made
// against floor(1/lambda) exactly.
inline int t_lambda(const TreeParams& params, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must be in (0,1]");
  uint128 budget = static_cast<uint128>(1.0 / lambda);
  int t = 0;
  while (t < 200 && ball_size(params, t + 1) <= budget) ++t;
  return t;
}

inline bool estimator_uses_p(Estimator e) {
  return e == Estimator::LocalUniqueness || e == Estimator::TwoPoint;
}

inline bool estimator_uses_lambda(Estimator e) {
  return e != Estimator::WallGrowth && e != Estimator::IpvtAdjacency;
}

inline std::vector<int> default_eval_radii(Estimator e) {
  if (e == Estimator::WallGrowth) return {5, 10};
  return {8, 12, 16};
}

inline void validate_config(const ExperimentConfig& cfg) {
  validate(cfg.params);
  if (cfg.replicas < 1) throw std::invalid_argument("replicas must be >= 1");
  if (cfg.R < 0 || cfg.R > 64) throw std::invalid_argument("R out of range [0,64]");
  if (!(cfg.theta0 > 0.0) || !std::isfinite(cfg.theta0))
    throw std::invalid_argument("theta0 must be positive and finite");
  for (double l : cfg.lambdas)
    if (!(l > 0.0 && l <= 1.0)) throw std::invalid_argument("lambda must be in (0,1]");
  for (double p : cfg.ps)
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must be in [0,1]");
  if (estimator_uses_lambda(cfg.estimator) && cfg.lambdas.empty())
    throw std::invalid_argument("lambda list must not be empty for this estimator");
  if (estimator_uses_p(cfg.estimator) && cfg.ps.empty())
    throw std::invalid_argument("p list must not be empty for this estimator");
  if (cfg.cell_count_k < 0) throw std::invalid_argument("K must be >= 0");
  if (cfg.levels < 2 || cfg.levels > 64) throw std::invalid_argument("levels out of range [2,64]");
  if (cfg.sub_radius < 0) throw std::invalid_argument("sub_radius must be >= 0");
  if (cfg.bootstrap < 1) throw std::invalid_argument("bootstrap must be >= 1");
  if (cfg.r_wall < 2) throw std::invalid_argument("r_wall must be >= 2");
  if (cfg.wall_pairs < 1) throw std::invalid_argument("wall_pairs must be >= 1");
  if (cfg.core_radius < 0) throw std::invalid_argument("core_radius must be >= 0");
  std::vector<int> radii = cfg.eval_radii.empty() ? default_eval_radii(cfg.estimator)
                                                  : cfg.eval_radii;
  if (cfg.estimator == Estimator::WallGrowth || cfg.estimator == Estimator::IpvtAdjacency) {
    if (radii.size() < 2) throw std::invalid_argument("eval_radii needs at least two windows");
    for (std::size_t i = 0; i < radii.size(); ++i) {
      if (radii[i] < 1) throw std::invalid_argument("eval_radii entries must be >= 1");
      if (i > 0 && radii[i] <= radii[i - 1])
        throw std::invalid_argument("eval_radii must be strictly increasing");
    }
  }
  if (cfg.estimator == Estimator::ThetaRatio)
    for (double l : cfg.lambdas)
      if (t_lambda(cfg.params, l) < 4)
        throw std::invalid_argument("lambda too large for the ratio diagnostic (t_lambda < 4)");
  for (const auto& [u, v] : cfg.pairs)
    if (!is_valid_vertex(cfg.params, u) || !is_valid_vertex(cfg.params, v))
      throw std::invalid_argument("pair endpoint invalid for the configured (d,k)");
}

// One output row. lambda/p are NaN when the estimator has no such parameter;
// estimate/stderr are NaN when no replica was decided. `point` disambiguates
// rows within one parameter point (level, pair index, or window radius).
// `seconds` is wall-clock bookkeeping and is never serialized into results.
struct ExperimentResult {
  std::string name;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double p = std::numeric_limits<double>::quiet_NaN();
  int R = 0;
  long long point = 0;
  double estimate = std::numeric_limits<double>::quiet_NaN();
  double stderr_value = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t n_replicas = 0;
  std::uint64_t n_undecided = 0;
  std::uint64_t seed = 0;
  double seconds = 0.0;
};

namespace detail {

inline constexpr std::uint64_t kConcernNuclei = 1;
inline constexpr std::uint64_t kConcernColor = 2;
inline constexpr std::uint64_t kConcernIdeal = 3;
inline constexpr std::uint64_t kConcernCounts = 4;
inline constexpr std::uint64_t kConcernBootstrap = 5;

inline std::uint64_t replica_seed(std::uint64_t master, std::uint64_t grid, std::uint64_t rep,
                                  std::uint64_t concern) {
  return derive_seed(master, {grid, rep, concern});
}

// Runs fn(rep) for rep in [0, replicas) on up to `threads` workers. Callers
// write into per-replica slots, so results are identical for every thread
// count; the first exception wins and is rethrown after joining.
template <typename Fn>
void for_each_replica(int replicas, int threads, Fn&& fn) {
  if (threads <= 1) {
    for (int rep = 0; rep < replicas; ++rep) fn(rep);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex errorMutex;
  auto worker = [&] {
    for (;;) {
      int rep = next.fetch_add(1);
      if (rep >= replicas) return;
      try {
        fn(rep);
      } catch (...) {
        std::lock_guard<std::mutex> lock(errorMutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  int n = std::min(threads, replicas);
  pool.reserve(n);
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline std::vector<std::uint32_t> cells_meeting_ball(const WindowGraph& win,
                                                     const Tessellation& tess, int r) {
  std::uint32_t cut = win.ball_count(std::min(r, win.radius()));
  std::vector<std::uint32_t> ids(tess.cell.begin(), tess.cell.begin() + cut);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

inline ExperimentResult event_row(const char* name, double lambda, double p, int R,
                                  long long point, std::uint64_t trueCount,
                                  std::uint64_t falseCount, std::uint64_t undecided,
                                  std::uint64_t seed) {
  ExperimentResult row;
  row.name = name;
  row.lambda = lambda;
  row.p = p;
  row.R = R;
  row.point = point;
  std::uint64_t decided = trueCount + falseCount;
  if (decided > 0) {
    double est = static_cast<double>(trueCount) / static_cast<double>(decided);
    row.estimate = est;
    row.stderr_value = std::sqrt(est * (1.0 - est) / static_cast<double>(decided));
  }
  row.n_replicas = decided + undecided;
  row.n_undecided = undecided;
  row.seed = seed;
  return row;
}

// Mean and standard error of the mean over fixed-order slots.
inline std::pair<double, double> mean_and_se(const std::vector<double>& xs) {
  double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var = xs.size() > 1 ? var / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

}  // namespace detail

// Fraction of pairs of distinct cells meeting B_r that are Delaunay-adjacent
// with a certified witness edge; 1.0 when at most one cell meets the ball.
inline double certified_adjacency_fraction(const WindowGraph& win, const Tessellation& tess,
                                           int r) {
  std::vector<std::uint32_t> ids = detail::cells_meeting_ball(win, tess, r);
  if (ids.size() <= 1) return 1.0;
  std::size_t have = 0;
  for (const DelaunayEdge& e : delaunay_adjacency(win, tess)) {
    if (!e.certified) continue;
    if (std::binary_search(ids.begin(), ids.end(), e.a) &&
        std::binary_search(ids.begin(), ids.end(), e.b))
      ++have;
  }
  double total = static_cast<double>(ids.size()) * (ids.size() - 1) / 2.0;
  return static_cast<double>(have) / total;
}

// P(event) over (lambda, p) grid points for the four tessellation events.
// Estimates divide decided replicas only; undecided counts ride along.
inline std::vector<ExperimentResult> estimate_event(const ExperimentConfig& cfg,
                                                    int threads = 1) {
  validate_config(cfg);
  const TreeParams& params = cfg.params;
  const Estimator kind = cfg.estimator;
  if (kind != Estimator::LocalUniqueness && kind != Estimator::NeighborCompleteness &&
      kind != Estimator::CellCountGeqK && kind != Estimator::TwoPoint)
    throw std::invalid_argument("estimate_event only runs the tessellation-event estimators");

  std::vector<std::pair<Vertex, Vertex>> pairs = cfg.pairs;
  if (kind == Estimator::TwoPoint && pairs.empty()) {
    Vertex far = origin(params);
    far.coords[0].assign(static_cast<std::size_t>(std::max(cfg.R, 1)), 0);
    pairs.emplace_back(origin(params), far);
  }
  long long pairSpan = 0;
  for (const auto& [u, v] : pairs)
    pairSpan = std::max({pairSpan, vertex_norm(u), vertex_norm(v)});

  const bool usesP = estimator_uses_p(kind);
  const std::vector<double> pGrid = usesP ? cfg.ps : std::vector<double>{0.0};
  std::vector<ExperimentResult> rows;

  for (std::size_t li = 0; li < cfg.lambdas.size(); ++li) {
    double lambda = cfg.lambdas[li];
    for (std::size_t pi = 0; pi < pGrid.size(); ++pi) {
      double p = pGrid[pi];
      std::uint64_t grid = li * pGrid.size() + pi;
      detail::Timer timer;
      std::size_t streams = kind == Estimator::TwoPoint ? pairs.size() : 1;
      // outcome slots: 1 holds, 0 fails, -1 undecided
      std::vector<std::vector<std::int8_t>> outcome(
          streams, std::vector<std::int8_t>(cfg.replicas, -1));

      detail::for_each_replica(cfg.replicas, threads, [&](int rep) {
        std::uint64_t ns = detail::replica_seed(cfg.seed, grid, rep, detail::kConcernNuclei);
        switch (kind) {
          case Estimator::LocalUniqueness: {
            CertifiedTessellation ct =
                certified_window_tessellation(params, lambda, 3 * cfg.R, ns);
            ColoredTessellation colored = color_tessellation(
                ct.window, ct.tess, p,
                detail::replica_seed(cfg.seed, grid, rep, detail::kConcernColor));
            EventOutcome ev = local_uniqueness_event(colored, cfg.R, origin(params));
            outcome[0][rep] = ev == EventOutcome::Holds ? 1 : ev == EventOutcome::Fails ? 0 : -1;
            break;
          }
          case Estimator::NeighborCompleteness: {
            CertifiedTessellation ct = certified_window_tessellation(params, lambda, cfg.R, ns);
            bool ok = certified_adjacency_fraction(ct.window, ct.tess, cfg.R) == 1.0;
            outcome[0][rep] = ok ? 1 : 0;
            break;
          }
          case Estimator::CellCountGeqK: {
            CertifiedTessellation ct = certified_window_tessellation(params, lambda, cfg.R, ns);
            std::size_t n = detail::cells_meeting_ball(ct.window, ct.tess, cfg.R).size();
            outcome[0][rep] = n > static_cast<std::size_t>(cfg.cell_count_k) ? 1 : 0;
            break;
          }
          case Estimator::TwoPoint: {
            int winR = static_cast<int>(std::max<long long>(cfg.R, pairSpan));
            CertifiedTessellation ct = certified_window_tessellation(params, lambda, winR, ns);
            ColoredTessellation colored = color_tessellation(
                ct.window, ct.tess, p,
                detail::replica_seed(cfg.seed, grid, rep, detail::kConcernColor));
            for (std::size_t q = 0; q < pairs.size(); ++q) {
              EventOutcome ev = two_point_event(colored, pairs[q].first, pairs[q].second);
              outcome[q][rep] =
                  ev == EventOutcome::Holds ? 1 : ev == EventOutcome::Fails ? 0 : -1;
            }
            break;
          }
          default:
            break;
        }
      });

      double elapsed = timer.seconds();
      for (std::size_t q = 0; q < streams; ++q) {
        std::uint64_t holds = 0, fails = 0, und = 0;
        for (std::int8_t o : outcome[q]) (o == 1 ? holds : o == 0 ? fails : und) += 1;
        ExperimentResult row = detail::event_row(
            estimator_name(kind), lambda,
            usesP ? p : std::numeric_limits<double>::quiet_NaN(), cfg.R,
            static_cast<long long>(q), holds, fails, und, cfg.seed);
        row.seconds = elapsed;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

// Per-level point counts at distance t_lambda + m against their exact
// binomial law, plus adjacent-level count ratios against the exact
// sphere-size ratio. Count rows are z-scores (stderr 1 by construction);
// exact-prediction rows carry n_replicas = 0.
inline std::vector<ExperimentResult> theta_ratio_diagnostic(const ExperimentConfig& cfg,
                                                            int threads = 1) {
  validate_config(cfg);
  if (cfg.estimator != Estimator::ThetaRatio)
    throw std::invalid_argument("theta_ratio_diagnostic requires estimator theta_ratio");
  const TreeParams& params = cfg.params;
  std::vector<ExperimentResult> rows;

  for (std::size_t li = 0; li < cfg.lambdas.size(); ++li) {
    double lambda = cfg.lambdas[li];
    int t = t_lambda(params, lambda);
    detail::Timer timer;
    std::vector<long long> sphere(cfg.levels);
    for (int m = 0; m < cfg.levels; ++m) {
      uint128 s = sphere_size(params, t + m);
      if (s > static_cast<uint128>(std::numeric_limits<long long>::max()))
        throw std::invalid_argument("sphere too large for the ratio diagnostic");
      sphere[m] = static_cast<long long>(s);
    }
    std::vector<std::vector<long long>> counts(
        cfg.replicas, std::vector<long long>(cfg.levels, 0));
    detail::for_each_replica(cfg.replicas, threads, [&](int rep) {
      RandomStream stream(detail::replica_seed(cfg.seed, li, rep, detail::kConcernCounts));
      for (int m = 0; m < cfg.levels; ++m) counts[rep][m] = stream.binomial(sphere[m], lambda);
    });
    double elapsed = timer.seconds();

    double n = static_cast<double>(cfg.replicas);
    std::vector<double> mean(cfg.levels, 0.0), se(cfg.levels, 0.0);
    for (int m = 0; m < cfg.levels; ++m) {
      for (int rep = 0; rep < cfg.replicas; ++rep)
        mean[m] += static_cast<double>(counts[rep][m]);
      mean[m] /= n;
      double sd = std::sqrt(static_cast<double>(sphere[m]) * lambda * (1.0 - lambda));
      se[m] = sd / std::sqrt(n);
    }
    auto push = [&](const char* name, long long point, double est, double err,
                    std::uint64_t reps) {
      ExperimentResult row;
      row.name = name;
      row.lambda = lambda;
      row.R = t;
      row.point = point;
      row.estimate = est;
      row.stderr_value = err;
      row.n_replicas = reps;
      row.seed = cfg.seed;
      row.seconds = elapsed;
      rows.push_back(std::move(row));
    };
    for (int m = 0; m < cfg.levels; ++m) {
      double mu = lambda * static_cast<double>(sphere[m]);
      double z = se[m] > 0.0 ? (mean[m] - mu) / se[m]
                             : std::numeric_limits<double>::quiet_NaN();
      push("theta_count_z", m, z, 1.0, cfg.replicas);
    }
    for (int m = 0; m + 1 < cfg.levels; ++m) {
      double est = std::numeric_limits<double>::quiet_NaN();
      double err = std::numeric_limits<double>::quiet_NaN();
      if (mean[m] > 0.0) {
        est = mean[m + 1] / mean[m];
        double rel1 = se[m + 1] / mean[m + 1];
        double rel0 = se[m] / mean[m];
        if (mean[m + 1] > 0.0) err = est * std::sqrt(rel1 * rel1 + rel0 * rel0);
      }
      push("theta_ratio", m, est, err, cfg.replicas);
      push("theta_ratio_exact", m,
           static_cast<double>(sphere[m + 1]) / static_cast<double>(sphere[m]), 0.0, 0);
    }
  }
  return rows;
}

// Empirical law of the bond encoding on the sub-window, as counts over the
// 2^edges configurations.
struct BondLaw {
  int edges = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
};

namespace detail {

inline int sub_window_edge_count(const WindowGraph& win, int r) {
  std::uint32_t cut = win.ball_count(std::min(r, win.radius()));
  int edges = 0;
  win.for_each_edge([&](std::uint32_t u, std::uint32_t v) {
    if (u < cut && v < cut) ++edges;
  });
  return edges;
}

// Bits in canonical edge order, MSB first, matching bond_hex.
template <typename SameCell>
std::uint32_t bond_config_index(const WindowGraph& win, int r, SameCell&& same) {
  std::uint32_t cut = win.ball_count(std::min(r, win.radius()));
  std::uint32_t idx = 0;
  win.for_each_edge([&](std::uint32_t u, std::uint32_t v) {
    if (u >= cut || v >= cut) return;
    idx = (idx << 1) | (same(u, v) ? 1u : 0u);
  });
  return idx;
}

}  // namespace detail

inline double tv_distance(const BondLaw& a, const BondLaw& b) {
  if (a.counts.size() != b.counts.size())
    throw std::invalid_argument("bond laws live on different configuration spaces");
  if (a.total == 0 || b.total == 0) throw std::invalid_argument("bond law has no samples");
  double tv = 0.0;
  for (std::size_t i = 0; i < a.counts.size(); ++i) {
    double pa = static_cast<double>(a.counts[i]) / static_cast<double>(a.total);
    double pb = static_cast<double>(b.counts[i]) / static_cast<double>(b.total);
    tv += std::abs(pa - pb);
  }
  return tv / 2.0;
}

inline BondLaw finite_bond_law(const TreeParams& params, double lambda, int subRadius,
                               int replicas, std::uint64_t master, std::uint64_t grid,
                               int threads = 1) {
  WindowGraph sub(params, subRadius);
  int edges = detail::sub_window_edge_count(sub, subRadius);
  if (edges > 20) throw std::invalid_argument("sub-window has more than 20 edges");
  BondLaw law;
  law.edges = edges;
  law.counts.assign(std::size_t{1} << edges, 0);
  std::vector<std::uint32_t> slot(replicas, 0);
  detail::for_each_replica(replicas, threads, [&](int rep) {
    std::uint64_t ns = detail::replica_seed(master, grid, rep, detail::kConcernNuclei);
    CertifiedTessellation ct = certified_window_tessellation(params, lambda, subRadius, ns);
    const std::vector<std::uint32_t>& cell = ct.tess.cell;
    slot[rep] = detail::bond_config_index(
        sub, subRadius, [&](std::uint32_t u, std::uint32_t v) { return cell[u] == cell[v]; });
  });
  for (std::uint32_t s : slot) ++law.counts[s];
  law.total = static_cast<std::uint64_t>(replicas);
  return law;
}

inline BondLaw ideal_bond_law(const TreeParams& params, double theta0, int subRadius,
                              int replicas, std::uint64_t master, int threads = 1) {
  WindowGraph sub(params, subRadius);
  int edges = detail::sub_window_edge_count(sub, subRadius);
  if (edges > 20) throw std::invalid_argument("sub-window has more than 20 edges");
  BondLaw law;
  law.edges = edges;
  law.counts.assign(std::size_t{1} << edges, 0);
  std::vector<std::uint32_t> slot(replicas, 0);
  detail::for_each_replica(replicas, threads, [&](int rep) {
    std::uint64_t is = detail::replica_seed(master, 0, rep, detail::kConcernIdeal);
    IpvtSample sample = sample_ipvt(params, subRadius, theta0, is);
    Tessellation tess = ideal_tessellation(sub, sample);
    slot[rep] = detail::bond_config_index(
        sub, subRadius,
        [&](std::uint32_t u, std::uint32_t v) { return tess.cell[u] == tess.cell[v]; });
  });
  for (std::uint32_t s : slot) ++law.counts[s];
  law.total = static_cast<std::uint64_t>(replicas);
  return law;
}

namespace detail {

// Multinomial resample of a law by conditional binomials; used by the TV
// bootstrap. Empirical-TV estimators are biased upward at finite sample
// sizes, which the summary notes record.
inline BondLaw resample_law(const BondLaw& law, RandomStream& stream) {
  BondLaw out;
  out.edges = law.edges;
  out.counts.assign(law.counts.size(), 0);
  out.total = law.total;
  std::uint64_t remaining = law.total;
  std::uint64_t massLeft = law.total;
  for (std::size_t i = 0; i < law.counts.size() && remaining > 0; ++i) {
    if (law.counts[i] == 0) continue;
    if (law.counts[i] == massLeft) {
      out.counts[i] = remaining;
      remaining = 0;
      break;
    }
    double q = static_cast<double>(law.counts[i]) / static_cast<double>(massLeft);
    long long draw = stream.binomial(static_cast<long long>(remaining), q);
    out.counts[i] = static_cast<std::uint64_t>(draw);
    remaining -= static_cast<std::uint64_t>(draw);
    massLeft -= law.counts[i];
  }
  return out;
}

}  // namespace detail

// TV distance between the finite-model bond law and the ideal-model bond law
// on the sub-window, one row per lambda, with bootstrap standard errors.
inline std::vector<ExperimentResult> diagram_tv_distance(const ExperimentConfig& cfg,
                                                         int threads = 1) {
  validate_config(cfg);
  if (cfg.estimator != Estimator::DiagramTv)
    throw std::invalid_argument("diagram_tv_distance requires estimator diagram_tv");
  const TreeParams& params = cfg.params;
  std::vector<ExperimentResult> rows;
  detail::Timer idealTimer;
  BondLaw ideal = ideal_bond_law(params, cfg.theta0, cfg.sub_radius, cfg.replicas, cfg.seed,
                                 threads);
  double idealSeconds = idealTimer.seconds();

  for (std::size_t li = 0; li < cfg.lambdas.size(); ++li) {
    double lambda = cfg.lambdas[li];
    detail::Timer timer;
    BondLaw finite = finite_bond_law(params, lambda, cfg.sub_radius, cfg.replicas, cfg.seed,
                                     li, threads);
    double tv = tv_distance(finite, ideal);

    RandomStream boot(detail::replica_seed(cfg.seed, li, 0, detail::kConcernBootstrap));
    double sum = 0.0, sumSq = 0.0;
    for (int b = 0; b < cfg.bootstrap; ++b) {
      BondLaw fa = detail::resample_law(finite, boot);
      BondLaw fb = detail::resample_law(ideal, boot);
      double t = tv_distance(fa, fb);
      sum += t;
      sumSq += t * t;
    }
    double nb = static_cast<double>(cfg.bootstrap);
    double var = std::max(0.0, sumSq / nb - (sum / nb) * (sum / nb));

    ExperimentResult row;
    row.name = "diagram_tv";
    row.lambda = lambda;
    row.R = cfg.sub_radius;
    row.point = 0;
    row.estimate = tv;
    row.stderr_value = std::sqrt(var);
    row.n_replicas = cfg.replicas;
    row.seed = cfg.seed;
    row.seconds = timer.seconds() + idealSeconds / static_cast<double>(cfg.lambdas.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

// Certified walls of randomly drawn certified pairs across evaluation radii:
// pairs are selected as certified_wall_pairs of the smallest radius (so each
// has a witnessed wall vertex there), then their symmetric pair_wall counts
// are compared across radii. Rows report the fraction of (sample, pair)
// observations with a nonempty certified wall at each radius, the fraction
// that strictly grow between consecutive radii, and mean certified sizes.
inline std::vector<ExperimentResult> wall_growth(const ExperimentConfig& cfg, int threads = 1) {
  validate_config(cfg);
  if (cfg.estimator != Estimator::WallGrowth)
    throw std::invalid_argument("wall_growth requires estimator wall_growth");
  const TreeParams& params = cfg.params;
  std::vector<int> radii = cfg.eval_radii.empty() ? default_eval_radii(cfg.estimator)
                                                  : cfg.eval_radii;
  int maxRadius = radii.back();
  detail::Timer timer;

  // sizes[rep] : per radius, per pair, certified wall size; SIZE_MAX marks
  // pairs a small sample could not form.
  constexpr std::size_t kMissing = std::numeric_limits<std::size_t>::max();
  std::vector<std::vector<std::vector<std::size_t>>> sizes(
      cfg.replicas,
      std::vector<std::vector<std::size_t>>(radii.size(),
                                            std::vector<std::size_t>(cfg.wall_pairs, kMissing)));

  // Sample cutoff c + 2(maxRadius - 1): the per-vertex wall certificate then
  // reads lo + r_wall < c + maxRadius - 2, which dominates the realized
  // near-minimal wall values, while the sample stays a fraction of the size
  // the full window certification would need. Walls never read ownership
  // outside certificates, so the shortfall is sound.
  detail::for_each_replica(cfg.replicas, threads, [&](int rep) {
    std::uint64_t is = detail::replica_seed(cfg.seed, 0, rep, detail::kConcernIdeal);
    IpvtSample sample = sample_ipvt(params, std::max(1, maxRadius - 1), cfg.theta0, is);
    WindowGraph win(params, maxRadius);
    IdealWallField ctx = ideal_wall_field(win, sample);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs =
        certified_wall_pairs(ctx, cfg.r_wall, radii.front());
    std::mt19937_64 draw(detail::replica_seed(cfg.seed, 1, rep, detail::kConcernIdeal));
    std::shuffle(pairs.begin(), pairs.end(), draw);
    if (pairs.size() > static_cast<std::size_t>(cfg.wall_pairs))
      pairs.resize(cfg.wall_pairs);
    for (std::size_t ri = 0; ri < radii.size(); ++ri)
      for (std::size_t q = 0; q < pairs.size(); ++q) {
        WallSet w = pair_wall(ctx, pairs[q].first, pairs[q].second, cfg.r_wall, radii[ri]);
        sizes[rep][ri][q] = w.certified.size();
      }
  });
  double elapsed = timer.seconds();

  std::vector<ExperimentResult> rows;
  auto push = [&](const char* name, long long point, std::uint64_t holds, std::uint64_t fails) {
    ExperimentResult row = detail::event_row(name, std::numeric_limits<double>::quiet_NaN(),
                                             std::numeric_limits<double>::quiet_NaN(),
                                             cfg.r_wall, point, holds, fails, 0, cfg.seed);
    row.seconds = elapsed;
    rows.push_back(std::move(row));
  };
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    std::uint64_t nonempty = 0, empty = 0;
    std::vector<double> obs;
    for (int rep = 0; rep < cfg.replicas; ++rep)
      for (int q = 0; q < cfg.wall_pairs; ++q) {
        std::size_t s = sizes[rep][ri][q];
        if (s == kMissing) continue;
        (s > 0 ? nonempty : empty) += 1;
        obs.push_back(static_cast<double>(s));
      }
    push("wall_certified_nonempty", radii[ri], nonempty, empty);
    auto [mean, se] = detail::mean_and_se(obs);
    ExperimentResult row;
    row.name = "wall_certified_mean_size";
    row.R = cfg.r_wall;
    row.point = radii[ri];
    row.estimate = mean;
    row.stderr_value = se;
    row.n_replicas = obs.size();
    row.seed = cfg.seed;
    row.seconds = elapsed;
    rows.push_back(std::move(row));
  }
  for (std::size_t ri = 1; ri < radii.size(); ++ri) {
    std::uint64_t grew = 0, stalled = 0;
    for (int rep = 0; rep < cfg.replicas; ++rep)
      for (int q = 0; q < cfg.wall_pairs; ++q) {
        std::size_t lo = sizes[rep][ri - 1][q];
        std::size_t hi = sizes[rep][ri][q];
        if (lo == kMissing || hi == kMissing) continue;
        (hi > lo ? grew : stalled) += 1;
      }
    push("wall_certified_growth", radii[ri], grew, stalled);
  }
  return rows;
}

// Mean adjacency fraction among ideal cells meeting B_{core} as the window
// radius grows; per sample the fraction is nondecreasing in the radius
// because adjacency witnesses only accumulate.
inline std::vector<ExperimentResult> ipvt_adjacency(const ExperimentConfig& cfg,
                                                    int threads = 1) {
  validate_config(cfg);
  if (cfg.estimator != Estimator::IpvtAdjacency)
    throw std::invalid_argument("ipvt_adjacency requires estimator ipvt_adjacency");
  const TreeParams& params = cfg.params;
  std::vector<int> radii = cfg.eval_radii.empty() ? default_eval_radii(cfg.estimator)
                                                  : cfg.eval_radii;
  detail::Timer timer;
  std::vector<std::vector<double>> fraction(radii.size(),
                                            std::vector<double>(cfg.replicas, 0.0));
  detail::for_each_replica(cfg.replicas, threads, [&](int rep) {
    std::uint64_t is = detail::replica_seed(cfg.seed, 0, rep, detail::kConcernIdeal);
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
      WindowGraph win(params, radii[ri]);
      AdaptiveIdealTessellation ideal = ideal_tessellation_adaptive(win, cfg.theta0, is);
      fraction[ri][rep] = certified_adjacency_fraction(win, ideal.tess, cfg.core_radius);
    }
  });
  double elapsed = timer.seconds();

  std::vector<ExperimentResult> rows;
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    auto [mean, se] = detail::mean_and_se(fraction[ri]);
    ExperimentResult row;
    row.name = "ipvt_adjacency_fraction";
    row.R = cfg.core_radius;
    row.point = radii[ri];
    row.estimate = mean;
    row.stderr_value = se;
    row.n_replicas = cfg.replicas;
    row.seed = cfg.seed;
    row.seconds = elapsed;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<ExperimentResult> run_experiment(const ExperimentConfig& cfg,
                                                    int threads = 1) {
  switch (cfg.estimator) {
    case Estimator::LocalUniqueness:
    case Estimator::NeighborCompleteness:
    case Estimator::CellCountGeqK:
    case Estimator::TwoPoint:
      return estimate_event(cfg, threads);
    case Estimator::ThetaRatio:
      return theta_ratio_diagnostic(cfg, threads);
    case Estimator::DiagramTv:
      return diagram_tv_distance(cfg, threads);
    case Estimator::WallGrowth:
      return wall_growth(cfg, threads);
    case Estimator::IpvtAdjacency:
      return ipvt_adjacency(cfg, threads);
  }
  throw std::invalid_argument("unknown estimator");
}

// --- serialization -------------------------------------------------------

namespace detail {

// Shortest round-trip decimal; NaN spelled "nan".
inline void append_double(std::string& out, double v) {
  if (std::isnan(v)) {
    out += "nan";
    return;
  }
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

inline void append_u64(std::string& out, std::uint64_t v) {
  char buf[24];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

inline void append_i64(std::string& out, long long v) {
  char buf[24];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace detail

// CSV with a fixed header; lambda/p cells are empty when the estimator has no
// such parameter, numeric cells use shortest round-trip formatting.
inline std::string results_csv(const std::vector<ExperimentResult>& rows,
                               const TreeParams& params) {
  std::string out = "name,d,k,lambda,p,R,point,estimate,stderr,n_replicas,n_undecided,seed\n";
  for (const ExperimentResult& r : rows) {
    out += r.name;
    out += ',';
    detail::append_i64(out, params.d);
    out += ',';
    detail::append_i64(out, params.k);
    out += ',';
    if (!std::isnan(r.lambda)) detail::append_double(out, r.lambda);
    out += ',';
    if (!std::isnan(r.p)) detail::append_double(out, r.p);
    out += ',';
    detail::append_i64(out, r.R);
    out += ',';
    detail::append_i64(out, r.point);
    out += ',';
    detail::append_double(out, r.estimate);
    out += ',';
    detail::append_double(out, r.stderr_value);
    out += ',';
    detail::append_u64(out, r.n_replicas);
    out += ',';
    detail::append_u64(out, r.n_undecided);
    out += ',';
    detail::append_u64(out, r.seed);
    out += '\n';
  }
  return out;
}

inline nlohmann::json config_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["d"] = cfg.params.d;
  j["k"] = cfg.params.k;
  j["lambda"] = cfg.lambdas;
  j["p"] = cfg.ps;
  j["R"] = cfg.R;
  j["replicas"] = cfg.replicas;
  j["seed"] = cfg.seed;
  j["theta0"] = cfg.theta0;
  j["estimator"] = estimator_name(cfg.estimator);
  j["out_dir"] = cfg.out_dir;
  j["K"] = cfg.cell_count_k;
  j["levels"] = cfg.levels;
  j["sub_radius"] = cfg.sub_radius;
  j["bootstrap"] = cfg.bootstrap;
  j["eval_radii"] = cfg.eval_radii.empty() ? default_eval_radii(cfg.estimator) : cfg.eval_radii;
  j["r_wall"] = cfg.r_wall;
  j["wall_pairs"] = cfg.wall_pairs;
  j["core_radius"] = cfg.core_radius;
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [u, v] : cfg.pairs)
    pairs.push_back(vertex_to_string(u) + ":" + vertex_to_string(v));
  j["pairs"] = pairs;
  return j;
}

// Mirrors the CSV rows (NaN as null), plus the config echo, version, and
// methodology notes. Deliberately free of timestamps and thread counts.
inline nlohmann::json summary_json(const ExperimentConfig& cfg,
                                   const std::vector<ExperimentResult>& rows) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["config"] = config_json(cfg);
  nlohmann::json notes = nlohmann::json::array();
  notes.push_back("estimates divide decided replicas only; undecided counts are separate");
  if (cfg.estimator == Estimator::DiagramTv) {
    notes.push_back("empirical total-variation distances are biased upward at finite "
                    "replica counts; the bootstrap spread quantifies noise, not bias");
    notes.push_back("the comparison assumes the configured intensity sequence approaches "
                    "the level-intensity ideal model");
  }
  j["notes"] = notes;
  nlohmann::json out = nlohmann::json::array();
  auto num = [](double v) {
    return std::isnan(v) ? nlohmann::json() : nlohmann::json(v);
  };
  for (const ExperimentResult& r : rows) {
    nlohmann::json row;
    row["name"] = r.name;
    row["lambda"] = num(r.lambda);
    row["p"] = num(r.p);
    row["R"] = r.R;
    row["point"] = r.point;
    row["estimate"] = num(r.estimate);
    row["stderr"] = num(r.stderr_value);
    row["n_replicas"] = r.n_replicas;
    row["n_undecided"] = r.n_undecided;
    row["seed"] = r.seed;
    out.push_back(std::move(row));
  }
  j["results"] = out;
  return j;
}

}  // namespace ipvt_perc
