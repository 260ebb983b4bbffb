#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "ipvt_perc/horofunction.hpp"
#include "ipvt_perc/rng.hpp"
#include "ipvt_perc/tree_graph.hpp"
#include "ipvt_perc/voronoi.hpp"
#include "ipvt_perc/window.hpp"

namespace ipvt_perc {

// One sampled distance-like function in the ideal tessellation: its value at
// the origin (the level), a 64-bit tie-break label, and one seeded harmonic
// end per coordinate. End letters are pure functions of the seed, so
// deepening a ray can never change an already-materialized prefix.
struct IpvtFunction {
  long long level = 0;
  std::uint64_t label = 0;
  std::vector<std::uint64_t> end_seeds;  // one per coordinate

  bool operator==(const IpvtFunction& o) const {
    return level == o.level && label == o.label && end_seeds == o.end_seeds;
  }
};

// A realization of the ideal tessellation's driving point process, complete
// below the level cutoff: every function with f(o) <= cutoff is present and
// none above. Functions are sorted by (level, label); labels are pairwise
// distinct. With c the minimum level, ownership is exact on
// B_{(cutoff-c)/2}: an absent function g has g(o) >= cutoff+1, hence
// g(v) >= cutoff+1-|v|, while the level-c function gives a value <= c+|v|,
// and cutoff+1-|v| > c+|v| whenever 2|v| <= cutoff-c.
struct IpvtSample {
  TreeParams params{3, 1};
  double theta0 = 0.5;
  long long cutoff = 0;
  int radius = 0;  // the window radius the sample was sized for
  std::uint64_t seed = 0;
  std::uint32_t label_collisions = 0;
  std::vector<IpvtFunction> functions;

  long long min_level() const {
    if (functions.empty()) throw std::runtime_error("ipvt sample has no functions");
    long long mn = functions.front().level;
    for (const IpvtFunction& f : functions) mn = std::min(mn, f.level);
    return mn;
  }

  // Largest r such that ownership over B_r is provably that of the full
  // process; -1 when not even the origin is covered.
  int certified_radius() const {
    long long diff = cutoff - min_level();
    return diff < 0 ? -1 : static_cast<int>(diff / 2);
  }
};

// f(v) = level + sum_i (|w_i| - 2 lcp(ray_i, w_i)).
inline long long ipvt_eval(const TreeParams& params, const IpvtFunction& f, const Vertex& v) {
  if (static_cast<int>(f.end_seeds.size()) != params.k)
    throw std::invalid_argument("function arity does not match TreeParams");
  if (!is_valid_vertex(params, v)) throw std::invalid_argument("vertex invalid for TreeParams");
  long long total = f.level;
  for (int i = 0; i < params.k; ++i) {
    const Word& w = v.coords[i];
    std::size_t lcp = 0;
    while (lcp < w.size() && end_ray_letter(f.end_seeds[i], lcp, params.d) == w[lcp]) ++lcp;
    total += static_cast<long long>(w.size()) - 2 * static_cast<long long>(lcp);
  }
  return total;
}

// The same function as an explicit direction tuple, for callers that want to
// evaluate through the generic horofunction path.
inline DistanceLikeFunction materialize_function(const TreeParams& params,
                                                 const IpvtFunction& f) {
  if (static_cast<int>(f.end_seeds.size()) != params.k)
    throw std::invalid_argument("function arity does not match TreeParams");
  DistanceLikeFunction g;
  g.offset = f.level;
  for (int i = 0; i < params.k; ++i)
    g.dirs.push_back(Direction::end(EndRay::seeded(params.d, f.end_seeds[i])));
  return g;
}

namespace detail {

inline constexpr std::uint64_t kIpvtLevelTag = 0x4C45564Cu;   // per-level count stream
inline constexpr std::uint64_t kIpvtFnTag = 0x49504654u;      // per-function data stream
inline constexpr std::uint64_t kIpvtTailTag = 0x5441494Cu;    // below-floor remainder stream
inline constexpr std::uint64_t kIpvtRepairTag = 0x52504C42u;  // label collision repair

inline std::uint64_t zigzag(long long m) {
  return (static_cast<std::uint64_t>(m) << 1) ^ static_cast<std::uint64_t>(m >> 63);
}

inline double level_mean(int d, double theta0, long long m) {
  return theta0 * std::pow(static_cast<double>(d - 1), static_cast<double>(m));
}

// Smallest level sampled through its own substream. Mass below it is tiny
// and handled by one cutoff-independent remainder stream, so raising the
// cutoff never re-rolls anything.
inline long long slab_floor(int d, double theta0) {
  constexpr double kCut = 1e-14;
  long long m = 0;
  long long guard = 0;
  if (level_mean(d, theta0, m) >= kCut) {
    while (level_mean(d, theta0, m - 1) >= kCut) {
      --m;
      if (++guard > 1000000) throw std::invalid_argument("theta0 out of supported range");
    }
  } else {
    while (level_mean(d, theta0, m) < kCut) {
      ++m;
      if (++guard > 1000000) throw std::invalid_argument("theta0 out of supported range");
    }
  }
  return m;
}

inline void append_slab(const TreeParams& params, double theta0, std::uint64_t seed,
                        long long m, std::vector<IpvtFunction>& out) {
  double mean = level_mean(params.d, theta0, m);
  if (mean > 2e7) throw std::runtime_error("ipvt level slab too large; reduce radius or theta0");
  RandomStream counter(derive_seed(seed, {kIpvtLevelTag, zigzag(m)}));
  long long n = counter.poisson(mean);
  for (long long i = 0; i < n; ++i) {
    RandomStream fs(derive_seed(seed, {kIpvtFnTag, zigzag(m), static_cast<std::uint64_t>(i)}));
    IpvtFunction f;
    f.level = m;
    f.end_seeds.resize(params.k);
    for (int c = 0; c < params.k; ++c) f.end_seeds[c] = fs.next_u64();
    f.label = fs.next_u64();
    out.push_back(std::move(f));
  }
  if (out.size() > (std::size_t{1} << 24))
    throw std::runtime_error("ipvt sample too large; reduce radius or theta0");
}

inline bool function_order(const IpvtFunction& a, const IpvtFunction& b) {
  if (a.level != b.level) return a.level < b.level;
  if (a.label != b.label) return a.label < b.label;
  return a.end_seeds < b.end_seeds;
}

}  // namespace detail

// Draws the point process restricted to levels <= cutoff, where the cutoff is
// raised until it is at least (minimum level) + 2R, making ownership on B_R
// exact. Level counts are independent Poissons with mean theta0 (d-1)^m, each
// from a substream keyed by the level, so a larger cutoff extends a smaller
// one without disturbing shared levels; `force_cutoff_at_least` exposes that
// extension for stability checks. Labels are repaired to be pairwise
// distinct; repairs are counted.
inline IpvtSample sample_ipvt(const TreeParams& params, int R, double theta0, std::uint64_t seed,
                              long long force_cutoff_at_least =
                                  std::numeric_limits<long long>::min()) {
  validate(params);
  if (R < 0 || R > 200) throw std::invalid_argument("sample radius out of range");
  if (!(theta0 > 0.0) || !std::isfinite(theta0))
    throw std::invalid_argument("theta0 must be positive and finite");

  IpvtSample s;
  s.params = params;
  s.theta0 = theta0;
  s.radius = R;
  s.seed = seed;

  const long long floorLevel = detail::slab_floor(params.d, theta0);

  // Remainder below the slab floor: essentially always empty, but drawn
  // honestly; levels follow the conditional geometric law.
  {
    RandomStream ts(derive_seed(seed, {detail::kIpvtTailTag}));
    long long n = ts.poisson(theta_cumulative(params.d, theta0, floorLevel - 1));
    for (long long i = 0; i < n; ++i) {
      IpvtFunction f;
      f.end_seeds.resize(params.k);
      for (int c = 0; c < params.k; ++c) f.end_seeds[c] = ts.next_u64();
      f.label = ts.next_u64();
      double u = ts.next_unit();
      long long j = static_cast<long long>(std::log(1.0 - u) /
                                           std::log(1.0 / (params.d - 1)));
      f.level = floorLevel - 1 - j;
      s.functions.push_back(std::move(f));
    }
  }

  // Initial cutoff: smallest level with total mass >= 3.
  long long M = floorLevel;
  while (theta_cumulative(params.d, theta0, M) < 3.0) ++M;

  long long next = floorLevel;
  auto extendTo = [&](long long target) {
    for (; next <= target; ++next) detail::append_slab(params, theta0, seed, next, s.functions);
  };
  extendTo(M);

  int raises = 0;
  while (s.functions.empty()) {
    if (++raises > 64)
      throw std::runtime_error("ipvt sampling found no functions below the cutoff cap");
    ++M;
    extendTo(M);
  }
  long long c = s.functions.front().level;
  for (const IpvtFunction& f : s.functions) c = std::min(c, f.level);
  M = std::max(M, c + 2LL * R);
  M = std::max(M, force_cutoff_at_least);
  extendTo(M);
  s.cutoff = M;

  std::sort(s.functions.begin(), s.functions.end(), detail::function_order);
  {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(s.functions.size() * 2);
    for (std::size_t i = 0; i < s.functions.size(); ++i) {
      std::uint64_t attempt = 0;
      while (!seen.insert(s.functions[i].label).second) {
        s.functions[i].label =
            derive_seed(seed, {detail::kIpvtRepairTag, static_cast<std::uint64_t>(i), ++attempt});
        ++s.label_collisions;
      }
    }
  }
  if (s.label_collisions > 0)
    std::sort(s.functions.begin(), s.functions.end(), detail::function_order);
  return s;
}

namespace detail {

// Emits the window part of a function's quadrant: the product of per-ray
// prefix sets, enumerated by depth composition with incremental within-depth
// word ranks, so no vertex object is ever materialized.
class QuadrantSeeder {
 public:
  explicit QuadrantSeeder(const WindowGraph& win)
      : win_(win), d_(win.params().d), k_(win.params().k), depth_(k_), rank_(k_) {}

  void emit(const IpvtFunction& f, std::uint32_t source, std::vector<IndexSeed>& out) {
    f_ = &f;
    source_ = source;
    out_ = &out;
    descend(0, win_.radius());
  }

 private:
  void descend(int i, int budget) {
    if (i == k_) {
      out_->push_back({win_.index_by_rank(depth_.data(), rank_.data()), source_});
      return;
    }
    depth_[i] = 0;
    rank_[i] = 0;
    descend(i + 1, budget);
    std::uint64_t r = 0;
    for (int t = 1; t <= budget; ++t) {
      r = r * (d_ - 1) + end_ray_letter(f_->end_seeds[i], t - 1, d_);
      depth_[i] = t;
      rank_[i] = r;
      descend(i + 1, budget - t);
    }
  }

  const WindowGraph& win_;
  int d_, k_;
  std::vector<int> depth_;
  std::vector<std::uint64_t> rank_;
  const IpvtFunction* f_ = nullptr;
  std::uint32_t source_ = 0;
  std::vector<IndexSeed>* out_ = nullptr;
};

// K best functions per vertex by (f(v), label), via the identity
// f(v) + |v| = level + 2 dist(v, quadrant of f): a bucket sweep with edge
// weight 2 seeded at quadrant vertices with cost = level. Geodesics to the
// nearest quadrant point only descend in norm, so in-window distances are
// exact, and high-level functions are only ever seeded if the field is still
// open when their level's bucket comes up.
template <int K>
AssignField<K> ideal_field(const WindowGraph& win, const IpvtSample& sample,
                           bool requireCertified = true) {
  if (win.params().d != sample.params.d || win.params().k != sample.params.k)
    throw std::invalid_argument("window and sample parameters differ");
  if (sample.functions.empty()) throw std::invalid_argument("ipvt sample has no functions");
  if (!std::is_sorted(sample.functions.begin(), sample.functions.end(), function_order))
    throw std::invalid_argument("ipvt functions must be sorted by (level, label)");
  if (requireCertified && sample.certified_radius() < win.radius())
    throw std::runtime_error("ipvt cutoff not certified for the window radius");

  const std::vector<IpvtFunction>& fns = sample.functions;
  std::vector<std::uint64_t> labels(fns.size());
  for (std::size_t i = 0; i < fns.size(); ++i) labels[i] = fns[i].label;

  QuadrantSeeder seeder(win);
  std::size_t cur = 0;
  auto provider = [&](std::int32_t cost, std::vector<IndexSeed>& out) {
    for (; cur < fns.size() && fns[cur].level == cost; ++cur)
      seeder.emit(fns[cur], static_cast<std::uint32_t>(cur), out);
  };
  // Sweeping to the cutoff (not the last occupied level) fills every slot a
  // function with f(v) + |v| <= cutoff can claim, even when top levels are
  // empty by chance.
  return multi_source_assign_scheduled<K>(win, static_cast<std::int32_t>(fns.front().level),
                                          static_cast<std::int32_t>(sample.cutoff), labels, 2,
                                          provider);
}

}  // namespace detail

// Ownership over the window under (f(v), label) argmin, in the shared
// Tessellation shape: cell = function id (position in the sorted function
// list), dist = f(v) at the owner. The cutoff precondition makes every
// vertex certified: the winning value satisfies f(v)+|v| <= c+2|v| <= cutoff.
inline Tessellation ideal_tessellation(const WindowGraph& win, const IpvtSample& sample) {
  AssignField<1> field = detail::ideal_field<1>(win, sample);
  const std::uint32_t V = win.size();
  Tessellation tess;
  tess.cell.resize(V);
  tess.dist.resize(V);
  tess.certified.assign(V, 0);
  int firstViolation = win.radius() + 1;
  for (std::uint32_t v = 0; v < V; ++v) {
    std::int32_t cost = field.cost_at(v, 0);
    tess.cell[v] = field.owner_at(v, 0);
    tess.dist[v] = cost - win.layer_of(v);
    if (cost <= sample.cutoff)
      tess.certified[v] = 1;
    else
      firstViolation = std::min(firstViolation, win.layer_of(v));
  }
  tess.certified_radius = std::min(win.radius(), firstViolation - 1);
  return tess;
}

// Exact ideal tessellation without the a-priori cutoff c + 2R: levels are
// sampled lazily while the bucket sweep runs. The seed provider extends the
// sample to level `cost` just before that bucket is processed; extension is
// stable (per-level substreams, new levels sort strictly after old ones, and
// label repair walks the list in order), so already-emitted source indices
// stay valid. A vertex assigned at bucket b holds the minimum over every
// function of level <= b, and a function of level m > b costs >= m > b at
// every vertex, so the assignment is the exact infinite-volume restriction
// and every vertex is certified. The min-level function costs at most
// c + 2|v| anywhere, so the sweep always completes within bucket c + 2R; the
// early exit stops sampling at the completion cost, typically
// c + O(log |B_R|), exponentially below the a-priori bound.
struct AdaptiveIdealTessellation {
  IpvtSample sample;
  Tessellation tess;
};

inline AdaptiveIdealTessellation ideal_tessellation_adaptive(const WindowGraph& win,
                                                             double theta0, std::uint64_t seed) {
  const TreeParams& params = win.params();
  const int L = win.radius();
  IpvtSample s = sample_ipvt(params, 0, theta0, seed);
  const long long c = s.min_level();
  const long long cap = c + 2LL * L;
  std::vector<std::uint64_t> labels;
  labels.reserve(s.functions.size());
  for (const IpvtFunction& f : s.functions) labels.push_back(f.label);
  detail::QuadrantSeeder seeder(win);
  std::size_t cur = 0;
  auto provider = [&](std::int32_t cost, std::vector<IndexSeed>& out) {
    if (s.cutoff < cost) {
      s = sample_ipvt(params, 0, theta0, seed, cost);
      labels.clear();
      for (const IpvtFunction& f : s.functions) labels.push_back(f.label);
    }
    for (; cur < s.functions.size() && s.functions[cur].level == cost; ++cur)
      seeder.emit(s.functions[cur], static_cast<std::uint32_t>(cur), out);
  };
  AssignField<1> field = multi_source_assign_scheduled<1>(
      win, static_cast<std::int32_t>(c), static_cast<std::int32_t>(cap), labels, 2, provider);
  const std::uint32_t V = win.size();
  Tessellation tess;
  tess.cell.resize(V);
  tess.dist.resize(V);
  tess.certified.assign(V, 1);
  for (std::uint32_t v = 0; v < V; ++v) {
    if (field.owner_at(v, 0) == AssignField<1>::npos)
      throw std::runtime_error("adaptive ideal sweep left a vertex unassigned");
    tess.cell[v] = field.owner_at(v, 0);
    tess.dist[v] = field.cost_at(v, 0) - win.layer_of(v);
  }
  tess.certified_radius = L;
  return {std::move(s), std::move(tess)};
}

// 3-best ideal assignment, reusable across wall queries on one window. The
// sample need not certify the whole window: slots always list every function
// with value below cutoff - |v|, and wall queries certify per vertex, so a
// sample whose cutoff merely dominates the realized near-minimal values plus
// r_wall is enough.
struct IdealWallField {
  const WindowGraph* win = nullptr;
  const IpvtSample* sample = nullptr;
  AssignField<3> field;
};

inline IdealWallField ideal_wall_field(const WindowGraph& win, const IpvtSample& sample) {
  IdealWallField ctx;
  ctx.win = &win;
  ctx.sample = &sample;
  ctx.field = detail::ideal_field<3>(win, sample, /*requireCertified=*/false);
  return ctx;
}

// The wall between two functions at separation budget r_wall: vertices where
// the two values differ by at most 1 and every other sampled function sits
// more than r_wall above the first. `certified` vertices additionally
// exclude every unsampled function: such a function g has
// g(v) >= g(o) - |v| > cutoff - L, so f_a(v) + r_wall < cutoff - L suffices.
struct WallSet {
  std::uint32_t id_a = 0;
  std::uint32_t id_b = 0;
  int r_wall = 2;
  int radius = 0;
  std::vector<Vertex> certified;
  std::vector<Vertex> uncertain;
};

inline WallSet wall(const IdealWallField& ctx, std::uint32_t id_a, std::uint32_t id_b,
                    int r_wall) {
  const WindowGraph& win = *ctx.win;
  const IpvtSample& sample = *ctx.sample;
  const std::size_t n = sample.functions.size();
  if (id_a >= n || id_b >= n || id_a == id_b)
    throw std::invalid_argument("wall requires two distinct function ids in the sample");
  if (r_wall < 2) throw std::invalid_argument("wall separation must be an integer > 1");

  WallSet w;
  w.id_a = id_a;
  w.id_b = id_b;
  w.r_wall = r_wall;
  w.radius = win.radius();
  const IpvtFunction& fa = sample.functions[id_a];
  const IpvtFunction& fb = sample.functions[id_b];
  const long long exclusionBound = sample.cutoff - win.radius();
  for (std::uint32_t v = 0; v < win.size(); ++v) {
    Vertex vert = win.vertex(v);
    long long va = ipvt_eval(sample.params, fa, vert);
    long long vb = ipvt_eval(sample.params, fb, vert);
    if (std::llabs(va - vb) > 1) continue;
    auto [otherCost, otherOwner] = ctx.field.best_excluding(v, id_a, id_b);
    if (otherOwner != WindowGraph::npos) {
      long long otherVal = static_cast<long long>(otherCost) - win.layer_of(v);
      if (otherVal <= va + r_wall) continue;
    }
    if (va + r_wall < exclusionBound)
      w.certified.push_back(std::move(vert));
    else
      w.uncertain.push_back(std::move(vert));
  }
  return w;
}

inline WallSet wall(const IpvtSample& sample, std::uint32_t id_a, std::uint32_t id_b, int r_wall,
                    int radius) {
  WindowGraph win(sample.params, radius);
  IdealWallField ctx = ideal_wall_field(win, sample);
  return wall(ctx, id_a, id_b, r_wall);
}

// Wall of the unordered pair {a, b}: the union of the walls for (a, b) and
// (b, a), equivalently the ordered test with min(f_a(v), f_b(v)) as the
// reference value. When the two values coincide the orderings agree, so this
// is the natural symmetric form of the near-tie wall. `within` restricts the
// evaluation to B_within; field values inside a smaller ball are identical to
// those of a field built on the smaller window (every quadrant contains the
// origin and nearest quadrant points only descend in norm), so restriction
// equals re-evaluation, one sweep cheaper.
inline WallSet pair_wall(const IdealWallField& ctx, std::uint32_t id_a, std::uint32_t id_b,
                         int r_wall, int within = -1) {
  const WindowGraph& win = *ctx.win;
  const IpvtSample& sample = *ctx.sample;
  const std::size_t n = sample.functions.size();
  if (id_a >= n || id_b >= n || id_a == id_b)
    throw std::invalid_argument("pair_wall requires two distinct function ids in the sample");
  if (r_wall < 2) throw std::invalid_argument("wall separation must be an integer > 1");
  if (within < 0) within = win.radius();
  if (within > win.radius())
    throw std::invalid_argument("evaluation radius exceeds the field window");

  WallSet w;
  w.id_a = id_a;
  w.id_b = id_b;
  w.r_wall = r_wall;
  w.radius = within;
  const IpvtFunction& fa = sample.functions[id_a];
  const IpvtFunction& fb = sample.functions[id_b];
  const long long exclusionBound = sample.cutoff - within;
  const std::uint32_t scan = win.ball_count(within);
  for (std::uint32_t v = 0; v < scan; ++v) {
    Vertex vert = win.vertex(v);
    long long va = ipvt_eval(sample.params, fa, vert);
    long long vb = ipvt_eval(sample.params, fb, vert);
    if (std::llabs(va - vb) > 1) continue;
    long long lo = std::min(va, vb);
    auto [otherCost, otherOwner] = ctx.field.best_excluding(v, id_a, id_b);
    if (otherOwner != WindowGraph::npos) {
      long long otherVal = static_cast<long long>(otherCost) - win.layer_of(v);
      if (otherVal <= lo + r_wall) continue;
    }
    if (lo + r_wall < exclusionBound)
      w.certified.push_back(std::move(vert));
    else
      w.uncertain.push_back(std::move(vert));
  }
  return w;
}

// Unordered pairs {a, b} realized by at least one certified wall vertex in
// B_within: some v has a, b as the two best values within 1 of each other,
// every other sampled function more than r_wall above the smaller, and the
// unsampled exclusion certified. Sorted by (a, b), deduplicated.
inline std::vector<std::pair<std::uint32_t, std::uint32_t>> certified_wall_pairs(
    const IdealWallField& ctx, int r_wall, int within = -1) {
  if (r_wall < 2) throw std::invalid_argument("wall separation must be an integer > 1");
  const WindowGraph& win = *ctx.win;
  const IpvtSample& sample = *ctx.sample;
  if (within < 0) within = win.radius();
  if (within > win.radius())
    throw std::invalid_argument("evaluation radius exceeds the field window");
  const long long exclusionBound = sample.cutoff - within;
  const std::uint32_t scan = win.ball_count(within);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (std::uint32_t v = 0; v < scan; ++v) {
    auto [c1, o1] = ctx.field.best_excluding(v, WindowGraph::npos, WindowGraph::npos);
    if (o1 == WindowGraph::npos) continue;
    auto [c2, o2] = ctx.field.best_excluding(v, o1, WindowGraph::npos);
    if (o2 == WindowGraph::npos) continue;
    auto [c3, o3] = ctx.field.best_excluding(v, o1, o2);
    long long lay = win.layer_of(v);
    long long f1 = static_cast<long long>(c1) - lay;
    long long f2 = static_cast<long long>(c2) - lay;
    if (f2 - f1 > 1) continue;
    if (o3 != WindowGraph::npos) {
      long long f3 = static_cast<long long>(c3) - lay;
      if (f3 <= f1 + r_wall) continue;
    }
    if (f1 + r_wall >= exclusionBound) continue;
    auto key = std::minmax(o1, o2);
    out.emplace_back(key.first, key.second);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// JSON serialization: everything needed to replay ownership. End seeds give
// exact replay; prefixes to the sample radius are included as a readable,
// independently checkable digest of each ray.
inline std::string ipvt_to_json(const IpvtSample& s) {
  nlohmann::json j;
  j["d"] = s.params.d;
  j["k"] = s.params.k;
  j["theta0"] = s.theta0;
  j["cutoff"] = s.cutoff;
  j["radius"] = s.radius;
  j["seed"] = s.seed;
  j["label_collisions"] = s.label_collisions;
  nlohmann::json fns = nlohmann::json::array();
  for (const IpvtFunction& f : s.functions) {
    nlohmann::json e;
    e["level"] = f.level;
    e["label"] = f.label;
    nlohmann::json ends = nlohmann::json::array();
    for (int i = 0; i < s.params.k; ++i) {
      EndRay ray = EndRay::seeded(s.params.d, f.end_seeds[i]);
      nlohmann::json endj;
      endj["seed"] = f.end_seeds[i];
      endj["prefix"] = word_to_string(ray.prefix(static_cast<std::size_t>(s.radius)));
      ends.push_back(std::move(endj));
    }
    e["ends"] = std::move(ends);
    fns.push_back(std::move(e));
  }
  j["functions"] = std::move(fns);
  return j.dump(2);
}

inline IpvtSample ipvt_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  IpvtSample s;
  s.params = TreeParams{j.at("d").get<int>(), j.at("k").get<int>()};
  validate(s.params);
  s.theta0 = j.at("theta0").get<double>();
  if (!(s.theta0 > 0.0)) throw std::runtime_error("ipvt json: theta0 must be positive");
  s.cutoff = j.at("cutoff").get<long long>();
  s.radius = j.at("radius").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.label_collisions = j.at("label_collisions").get<std::uint32_t>();
  std::unordered_set<std::uint64_t> seen;
  for (const nlohmann::json& e : j.at("functions")) {
    IpvtFunction f;
    f.level = e.at("level").get<long long>();
    if (f.level > s.cutoff) throw std::runtime_error("ipvt json: function level above cutoff");
    f.label = e.at("label").get<std::uint64_t>();
    if (!seen.insert(f.label).second)
      throw std::runtime_error("ipvt json: duplicate function label");
    const nlohmann::json& ends = e.at("ends");
    if (static_cast<int>(ends.size()) != s.params.k)
      throw std::runtime_error("ipvt json: function arity does not match k");
    for (const nlohmann::json& endj : ends) {
      std::uint64_t endSeed = endj.at("seed").get<std::uint64_t>();
      EndRay ray = EndRay::seeded(s.params.d, endSeed);
      Word expect = parse_word(s.params, endj.at("prefix").get<std::string>());
      if (ray.prefix(expect.size()) != expect)
        throw std::runtime_error("ipvt json: ray prefix does not match its seed");
      f.end_seeds.push_back(endSeed);
    }
    s.functions.push_back(std::move(f));
  }
  std::sort(s.functions.begin(), s.functions.end(), detail::function_order);
  return s;
}

}  // namespace ipvt_perc
