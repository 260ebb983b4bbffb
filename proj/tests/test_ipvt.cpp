#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ipvt_perc/horofunction.hpp"
#include "ipvt_perc/ipvt.hpp"
#include "ipvt_perc/rng.hpp"
#include "ipvt_perc/tree_graph.hpp"
#include "ipvt_perc/voronoi.hpp"
#include "ipvt_perc/window.hpp"

using namespace ipvt_perc;

namespace {

// A hand-built sample whose certified radius covers `radius`: functions are
// given as (level, label, end seeds) and the cutoff is max level + 2 radius.
IpvtSample manual_sample(const TreeParams& p, int radius,
                         std::vector<IpvtFunction> fns) {
  std::sort(fns.begin(), fns.end(), [](const IpvtFunction& a, const IpvtFunction& b) {
    return a.level != b.level ? a.level < b.level : a.label < b.label;
  });
  IpvtSample s;
  s.params = p;
  s.theta0 = default_theta0(p.d);
  s.radius = radius;
  long long top = fns.front().level;
  for (const IpvtFunction& f : fns) top = std::max(top, f.level);
  s.cutoff = top + 2LL * radius;
  s.functions = std::move(fns);
  return s;
}

long long brute_eval(const IpvtSample& s, std::uint32_t id, const Vertex& v) {
  DistanceLikeFunction f = materialize_function(s.params, s.functions[id]);
  return horo_eval(s.params, f, v);
}

// Reference wall: direct filter over the ball with every function evaluated
// through the generic horofunction path.
WallSet brute_wall(const IpvtSample& s, std::uint32_t a, std::uint32_t b, int rw, int L) {
  WallSet w;
  w.id_a = a;
  w.id_b = b;
  w.r_wall = rw;
  w.radius = L;
  for (const Vertex& v : ball_vertices(s.params, L)) {
    long long va = brute_eval(s, a, v);
    long long vb = brute_eval(s, b, v);
    if (std::llabs(va - vb) > 1) continue;
    long long minOther = std::numeric_limits<long long>::max();
    for (std::uint32_t j = 0; j < s.functions.size(); ++j) {
      if (j == a || j == b) continue;
      minOther = std::min(minOther, brute_eval(s, j, v));
    }
    if (minOther != std::numeric_limits<long long>::max() && minOther <= va + rw) continue;
    if (va + rw < s.cutoff - L)
      w.certified.push_back(v);
    else
      w.uncertain.push_back(v);
  }
  return w;
}

}  // namespace

TEST_CASE("level counts follow the geometric intensity", "[ipvt]") {
  TreeParams p{3, 1};
  const int nSamples = 10000;
  std::map<long long, double> counts;
  long long worstCutoff = std::numeric_limits<long long>::max();
  for (int i = 0; i < nSamples; ++i) {
    IpvtSample s = sample_ipvt(p, 0, 1.0, derive_seed(417, {static_cast<std::uint64_t>(i)}));
    worstCutoff = std::min(worstCutoff, s.cutoff);
    for (const IpvtFunction& f : s.functions) {
      REQUIRE(f.level <= s.cutoff);
      counts[f.level] += 1.0;
    }
  }
  REQUIRE(worstCutoff >= 0);  // every sample covers levels -3..0
  for (long long m = -3; m <= 0; ++m) {
    double mean = counts[m] / nSamples;
    double expected = std::pow(2.0, static_cast<double>(m));  // theta0 (d-1)^m at theta0 = 1
    double se = std::sqrt(expected / nSamples);
    INFO("level " << m << " mean " << mean << " expected " << expected);
    CHECK(std::abs(mean - expected) <= 3.0 * se);
  }
  // Adjacent-level mean ratio approaches d - 1.
  double ratio = counts[0] / counts[-1];
  CHECK(std::abs(ratio - 2.0) < 0.2);
}

TEST_CASE("samples are sorted, labeled distinctly, and sized for the radius", "[ipvt]") {
  TreeParams p{3, 2};
  for (int i = 0; i < 20; ++i) {
    std::uint64_t seed = derive_seed(418, {static_cast<std::uint64_t>(i)});
    IpvtSample s = sample_ipvt(p, 3, default_theta0(p.d), seed);
    REQUIRE(!s.functions.empty());
    CHECK(s.radius == 3);
    CHECK(s.theta0 == default_theta0(p.d));
    CHECK(s.cutoff >= s.min_level() + 6);
    CHECK(s.certified_radius() >= 3);
    std::set<std::uint64_t> labels;
    for (std::size_t f = 0; f < s.functions.size(); ++f) {
      CHECK(s.functions[f].end_seeds.size() == 2);
      CHECK(s.functions[f].level <= s.cutoff);
      labels.insert(s.functions[f].label);
      if (f > 0) {
        bool ordered = s.functions[f - 1].level < s.functions[f].level ||
                       (s.functions[f - 1].level == s.functions[f].level &&
                        s.functions[f - 1].label < s.functions[f].label);
        CHECK(ordered);
      }
    }
    CHECK(labels.size() == s.functions.size());

    IpvtSample again = sample_ipvt(p, 3, default_theta0(p.d), seed);
    CHECK(again.functions == s.functions);
    CHECK(again.cutoff == s.cutoff);
  }
}

TEST_CASE("raising the cutoff extends a sample without disturbing it", "[ipvt]") {
  TreeParams p{3, 2};
  WindowGraph win(p, 3);
  for (int i = 0; i < 10; ++i) {
    std::uint64_t seed = derive_seed(419, {static_cast<std::uint64_t>(i)});
    IpvtSample s1 = sample_ipvt(p, 3, default_theta0(p.d), seed);
    IpvtSample s2 = sample_ipvt(p, 3, default_theta0(p.d), seed, s1.cutoff + 5);
    REQUIRE(s2.cutoff >= s1.cutoff + 5);
    REQUIRE(s2.functions.size() >= s1.functions.size());
    // Old functions keep their positions: new levels sort strictly after.
    for (std::size_t f = 0; f < s1.functions.size(); ++f)
      REQUIRE(s2.functions[f] == s1.functions[f]);
    for (std::size_t f = s1.functions.size(); f < s2.functions.size(); ++f)
      REQUIRE(s2.functions[f].level > s1.cutoff);

    Tessellation t1 = ideal_tessellation(win, s1);
    Tessellation t2 = ideal_tessellation(win, s2);
    REQUIRE(t1.cell == t2.cell);
    REQUIRE(t1.dist == t2.dist);
  }
}

TEST_CASE("ideal ownership matches a brute-force argmin", "[ipvt]") {
  for (TreeParams p : {TreeParams{3, 2}, TreeParams{4, 1}}) {
    WindowGraph win(p, 3);
    for (int i = 0; i < 10; ++i) {
      std::uint64_t seed = derive_seed(420, {static_cast<std::uint64_t>(p.d),
                                             static_cast<std::uint64_t>(i)});
      IpvtSample s = sample_ipvt(p, 3, default_theta0(p.d), seed);
      Tessellation tess = ideal_tessellation(win, s);
      REQUIRE(tess.certified_radius == 3);
      for (std::uint32_t v = 0; v < win.size(); ++v) {
        Vertex vert = win.vertex(v);
        long long bestVal = 0;
        std::uint64_t bestLabel = 0;
        std::uint32_t best = WindowGraph::npos;
        for (std::uint32_t f = 0; f < s.functions.size(); ++f) {
          long long val = brute_eval(s, f, vert);
          std::uint64_t label = s.functions[f].label;
          if (best == WindowGraph::npos || val < bestVal ||
              (val == bestVal && label < bestLabel)) {
            best = f;
            bestVal = val;
            bestLabel = label;
          }
        }
        REQUIRE(tess.cell[v] == best);
        REQUIRE(tess.dist[v] == bestVal);
        REQUIRE(tess.certified[v] == 1);
        // The winning value is pinched by the minimum level.
        long long c = s.min_level();
        REQUIRE(bestVal >= c - win.layer_of(v));
        REQUIRE(bestVal <= c + win.layer_of(v));
      }
    }
  }
}

TEST_CASE("ideal cell cores reconnect in the doubled window", "[ipvt]") {
  // A cell meets B_R along norm-decreasing descents into its quadrant, and
  // two such descents can join only through deeper quadrant vertices (the
  // componentwise-longest common refinement of their prefix tuples).  The
  // B_R portion of a cell may therefore fragment inside B_R itself, but two
  // depth <= R tuples join at depth <= 2R, so it reconnects within B_{2R}.
  TreeParams p{3, 2};
  constexpr int R = 3;
  WindowGraph win(p, 2 * R);
  auto label_components = [&win](const Tessellation& tess, int maxLayer,
                                 std::vector<std::int32_t>& comp) {
    comp.assign(win.size(), -1);
    std::int32_t next = 0;
    for (std::uint32_t v0 = 0; v0 < win.size(); ++v0) {
      if (win.layer_of(v0) > maxLayer || comp[v0] >= 0) continue;
      std::uint32_t cellId = tess.cell[v0];
      std::vector<std::uint32_t> stack{v0};
      comp[v0] = next;
      while (!stack.empty()) {
        std::uint32_t u = stack.back();
        stack.pop_back();
        auto [nb, ne] = win.neighbors(u);
        for (const std::uint32_t* t = nb; t != ne; ++t)
          if (win.layer_of(*t) <= maxLayer && tess.cell[*t] == cellId &&
              comp[*t] < 0) {
            comp[*t] = next;
            stack.push_back(*t);
          }
      }
      ++next;
    }
  };
  int fragmentedCells = 0;
  std::vector<std::int32_t> wide, narrow;
  for (int i = 0; i < 120; ++i) {
    IpvtSample s = sample_ipvt(p, 2 * R, default_theta0(p.d),
                               derive_seed(421, {static_cast<std::uint64_t>(i)}));
    Tessellation tess = ideal_tessellation(win, s);
    label_components(tess, 2 * R, wide);
    label_components(tess, R, narrow);
    std::map<std::uint32_t, std::int32_t> wideRep;
    std::map<std::uint32_t, std::int32_t> narrowRep;
    std::set<std::uint32_t> fragmented;
    for (std::uint32_t v = 0; v < win.size(); ++v) {
      if (win.layer_of(v) > R) continue;
      std::uint32_t id = tess.cell[v];
      auto [it, fresh] = wideRep.emplace(id, wide[v]);
      if (!fresh) REQUIRE(it->second == wide[v]);
      auto [nt, nfresh] = narrowRep.emplace(id, narrow[v]);
      if (!nfresh && nt->second != narrow[v]) fragmented.insert(id);
    }
    fragmentedCells += static_cast<int>(fragmented.size());
  }
  // The doubled window is not vacuous slack: some cells really do fragment
  // when restricted to B_R alone.
  REQUIRE(fragmentedCells > 0);

  SECTION("pinned fragmentation example") {
    // This sample's level-3 cell meets B_3 in exactly three vertices, each a
    // different depth split of its quadrant; they pairwise join only beyond
    // depth 3, so inside B_3 the cell is three isolated vertices.
    IpvtSample s = sample_ipvt(p, R, default_theta0(p.d), derive_seed(421, {0}));
    WindowGraph core(p, R);
    Tessellation tess = ideal_tessellation(core, s);
    std::uint32_t a = core.index_of(parse_vertex(p, "-,101"));
    std::uint32_t b = core.index_of(parse_vertex(p, "0,10"));
    std::uint32_t c = core.index_of(parse_vertex(p, "01,1"));
    REQUIRE(tess.cell[a] == tess.cell[b]);
    REQUIRE(tess.cell[b] == tess.cell[c]);
    std::uint32_t id = tess.cell[a];
    std::uint32_t owned = 0;
    for (std::uint32_t v = 0; v < core.size(); ++v)
      if (tess.cell[v] == id) {
        ++owned;
        auto [nb, ne] = core.neighbors(v);
        for (const std::uint32_t* t = nb; t != ne; ++t) CHECK(tess.cell[*t] != id);
      }
    REQUIRE(owned == 3);
  }
}

TEST_CASE("adaptive ideal tessellation matches the certified path", "[ipvt]") {
  TreeParams p{3, 2};
  WindowGraph win(p, 3);
  for (int i = 0; i < 40; ++i) {
    std::uint64_t seed = derive_seed(431, {static_cast<std::uint64_t>(i)});
    IpvtSample crude = sample_ipvt(p, 3, default_theta0(p.d), seed);
    Tessellation a = ideal_tessellation(win, crude);
    AdaptiveIdealTessellation b = ideal_tessellation_adaptive(win, default_theta0(p.d), seed);
    REQUIRE(b.tess.cell == a.cell);
    REQUIRE(b.tess.dist == a.dist);
    REQUIRE(b.tess.certified_radius == win.radius());
    REQUIRE(b.sample.functions.size() <= crude.functions.size());
    for (std::size_t f = 0; f < b.sample.functions.size(); ++f)
      REQUIRE(b.sample.functions[f] == crude.functions[f]);
  }

  SECTION("a large window stabilizes far below the worst-case cutoff") {
    WindowGraph big(p, 10);
    AdaptiveIdealTessellation t = ideal_tessellation_adaptive(big, default_theta0(p.d), 77);
    REQUIRE(t.tess.certified_radius == 10);
    REQUIRE(t.sample.cutoff < t.sample.min_level() + 20);
    IpvtSample crude = sample_ipvt(p, 3, default_theta0(p.d), 77);
    Tessellation small = ideal_tessellation(win, crude);
    for (std::uint32_t v = 0; v < win.size(); ++v) {
      REQUIRE(t.tess.cell[v] == small.cell[v]);
      REQUIRE(t.tess.dist[v] == small.dist[v]);
    }
  }
}

TEST_CASE("a single function owns everything", "[ipvt]") {
  TreeParams p{3, 2};
  IpvtFunction f;
  f.level = -1;
  f.label = 7;
  f.end_seeds = {11, 22};
  IpvtSample s = manual_sample(p, 4, {f});
  WindowGraph win(p, 4);
  Tessellation tess = ideal_tessellation(win, s);
  for (std::uint32_t v = 0; v < win.size(); ++v) {
    REQUIRE(tess.cell[v] == 0);
    REQUIRE(tess.dist[v] == ipvt_eval(p, f, win.vertex(v)));
    REQUIRE(tess.certified[v] == 1);
  }
  CHECK(tess.certified_radius == 4);
}

TEST_CASE("two-function walls reduce to the value gap", "[ipvt]") {
  TreeParams p{3, 2};
  IpvtFunction f1, f2;
  f1.level = 0;
  f1.label = 1;
  f1.end_seeds = {101, 102};
  f2.level = 1;
  f2.label = 2;
  f2.end_seeds = {201, 202};
  IpvtSample s = manual_sample(p, 4, {f1, f2});
  WallSet w = wall(s, 0, 1, 2, 4);
  WallSet expect = brute_wall(s, 0, 1, 2, 4);
  CHECK(w.certified == expect.certified);
  CHECK(w.uncertain == expect.uncertain);
  std::size_t total = 0;
  for (const Vertex& v : ball_vertices(p, 4)) {
    long long d1 = ipvt_eval(p, f1, v);
    long long d2 = ipvt_eval(p, f2, v);
    if (std::llabs(d1 - d2) <= 1) ++total;
  }
  CHECK(w.certified.size() + w.uncertain.size() == total);

  // Same directions shifted by 2: the gap is 2 everywhere, so no wall.
  IpvtFunction g = f1;
  g.level = f1.level + 2;
  g.label = 3;
  IpvtSample shifted = manual_sample(p, 4, {f1, g});
  WallSet none = wall(shifted, 0, 1, 2, 4);
  CHECK(none.certified.empty());
  CHECK(none.uncertain.empty());
}

TEST_CASE("walls match a brute-force filter", "[ipvt]") {
  TreeParams p{3, 2};
  for (int i = 0; i < 6; ++i) {
    IpvtSample s = sample_ipvt(p, 3, default_theta0(p.d),
                               derive_seed(422, {static_cast<std::uint64_t>(i)}));
    if (s.functions.size() < 3) continue;
    WindowGraph win(p, 3);
    IdealWallField ctx = ideal_wall_field(win, s);
    std::uint32_t pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (auto& pr : pairs) {
      WallSet fast = wall(ctx, pr[0], pr[1], 2);
      WallSet slow = brute_wall(s, pr[0], pr[1], 2, 3);
      REQUIRE(fast.certified == slow.certified);
      REQUIRE(fast.uncertain == slow.uncertain);
    }
  }
}

TEST_CASE("wall vertex sets grow with the evaluation radius", "[ipvt]") {
  TreeParams p{3, 2};
  IpvtSample s = sample_ipvt(p, 6, default_theta0(p.d), 77);
  REQUIRE(s.functions.size() >= 2);
  auto key = [](const Vertex& v) { return vertex_to_string(v); };
  WallSet small = wall(s, 0, 1, 2, 3);
  WallSet large = wall(s, 0, 1, 2, 6);
  std::set<std::string> inLarge;
  for (const Vertex& v : large.certified) inLarge.insert(key(v));
  for (const Vertex& v : large.uncertain) inLarge.insert(key(v));
  for (const Vertex& v : small.certified) CHECK(inLarge.count(key(v)) == 1);
  for (const Vertex& v : small.uncertain) CHECK(inLarge.count(key(v)) == 1);
}

TEST_CASE("pair walls union both orderings", "[ipvt]") {
  TreeParams p{3, 2};
  auto key = [](const Vertex& v) { return vertex_to_string(v); };
  for (int i = 0; i < 4; ++i) {
    IpvtSample s = sample_ipvt(p, 3, default_theta0(p.d),
                               derive_seed(431, {static_cast<std::uint64_t>(i)}));
    if (s.functions.size() < 3) continue;
    WindowGraph win(p, 3);
    IdealWallField ctx = ideal_wall_field(win, s);
    std::uint32_t pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (auto& pr : pairs) {
      WallSet sym = pair_wall(ctx, pr[0], pr[1], 2);
      WallSet ab = wall(ctx, pr[0], pr[1], 2);
      WallSet ba = wall(ctx, pr[1], pr[0], 2);
      std::set<std::string> cert, all, symCert, symAll;
      for (const Vertex& v : ab.certified) cert.insert(key(v));
      for (const Vertex& v : ba.certified) cert.insert(key(v));
      for (const Vertex& v : sym.certified) symCert.insert(key(v));
      all = cert;
      for (const Vertex& v : ab.uncertain) all.insert(key(v));
      for (const Vertex& v : ba.uncertain) all.insert(key(v));
      symAll = symCert;
      for (const Vertex& v : sym.uncertain) symAll.insert(key(v));
      REQUIRE(symCert == cert);
      REQUIRE(symAll == all);
    }
  }
}

TEST_CASE("restricted pair walls match a field on the smaller window", "[ipvt]") {
  TreeParams p{3, 2};
  auto key = [](const Vertex& v) { return vertex_to_string(v); };
  auto asSet = [&](const std::vector<Vertex>& vs) {
    std::set<std::string> out;
    for (const Vertex& v : vs) out.insert(key(v));
    return out;
  };
  for (int i = 0; i < 3; ++i) {
    IpvtSample s = sample_ipvt(p, 4, default_theta0(p.d),
                               derive_seed(437, {static_cast<std::uint64_t>(i)}));
    if (s.functions.size() < 2) continue;
    WindowGraph big(p, 4);
    WindowGraph small(p, 2);
    IdealWallField bigCtx = ideal_wall_field(big, s);
    IdealWallField smallCtx = ideal_wall_field(small, s);
    WallSet restricted = pair_wall(bigCtx, 0, 1, 2, 2);
    WallSet direct = pair_wall(smallCtx, 0, 1, 2);
    REQUIRE(restricted.radius == 2);
    REQUIRE(asSet(restricted.certified) == asSet(direct.certified));
    REQUIRE(asSet(restricted.uncertain) == asSet(direct.uncertain));
    REQUIRE(certified_wall_pairs(bigCtx, 2, 2) == certified_wall_pairs(smallCtx, 2));
  }
}

TEST_CASE("certified wall pairs carry a certified witness", "[ipvt]") {
  TreeParams p{3, 2};
  std::size_t seen = 0;
  for (int i = 0; i < 3; ++i) {
    IpvtSample s = sample_ipvt(p, 3, default_theta0(p.d),
                               derive_seed(433, {static_cast<std::uint64_t>(i)}));
    WindowGraph win(p, 3);
    IdealWallField ctx = ideal_wall_field(win, s);
    auto pairs = certified_wall_pairs(ctx, 2);
    REQUIRE(std::is_sorted(pairs.begin(), pairs.end()));
    REQUIRE(std::adjacent_find(pairs.begin(), pairs.end()) == pairs.end());
    for (auto [a, b] : pairs) {
      REQUIRE(a < b);
      REQUIRE_FALSE(pair_wall(ctx, a, b, 2).certified.empty());
    }
    seen += pairs.size();
  }
  REQUIRE(seen > 0);

  // Two functions, near-tie present: the only possible pair is (0, 1). With
  // the copy shifted by 2 the gap is 2 everywhere and no pair is realized.
  IpvtFunction f1, f2;
  f1.level = 0;
  f1.label = 1;
  f1.end_seeds = {101, 102};
  f2.level = 1;
  f2.label = 2;
  f2.end_seeds = {201, 202};
  IpvtSample two = manual_sample(p, 4, {f1, f2});
  WindowGraph win4(p, 4);
  IdealWallField ctx2 = ideal_wall_field(win4, two);
  auto pairs2 = certified_wall_pairs(ctx2, 2);
  if (pair_wall(ctx2, 0, 1, 2).certified.empty()) {
    REQUIRE(pairs2.empty());
  } else {
    REQUIRE(pairs2.size() == 1);
    REQUIRE(pairs2[0] == std::pair<std::uint32_t, std::uint32_t>(0, 1));
  }
  IpvtFunction g = f1;
  g.level = f1.level + 2;
  g.label = 3;
  IpvtSample shifted = manual_sample(p, 4, {f1, g});
  IdealWallField ctxS = ideal_wall_field(win4, shifted);
  REQUIRE(certified_wall_pairs(ctxS, 2).empty());
}

TEST_CASE("sampled ends are pairwise distinct", "[ipvt]") {
  TreeParams p{3, 2};
  IpvtSample s = sample_ipvt(p, 3, default_theta0(p.d), 99);
  for (int coord = 0; coord < p.k; ++coord) {
    std::set<Word> prefixes;
    for (const IpvtFunction& f : s.functions)
      prefixes.insert(EndRay::seeded(p.d, f.end_seeds[coord]).prefix(64));
    CHECK(prefixes.size() == s.functions.size());
  }
  // Deepening a ray extends its prefix in place.
  for (const IpvtFunction& f : s.functions) {
    Word shallow = EndRay::seeded(p.d, f.end_seeds[0]).prefix(10);
    Word deep = EndRay::seeded(p.d, f.end_seeds[0]).prefix(30);
    CHECK(std::equal(shallow.begin(), shallow.end(), deep.begin()));
  }
}

TEST_CASE("ipvt json round-trips and validates", "[ipvt]") {
  TreeParams p{3, 2};
  IpvtSample s = sample_ipvt(p, 3, default_theta0(p.d), 1234);
  std::string text = ipvt_to_json(s);
  IpvtSample back = ipvt_from_json(text);
  CHECK(back.params.d == p.d);
  CHECK(back.params.k == p.k);
  CHECK(back.theta0 == s.theta0);
  CHECK(back.cutoff == s.cutoff);
  CHECK(back.radius == s.radius);
  CHECK(back.seed == s.seed);
  CHECK(back.functions == s.functions);
  CHECK(ipvt_to_json(back) == text);

  WindowGraph win(p, 3);
  Tessellation t1 = ideal_tessellation(win, s);
  Tessellation t2 = ideal_tessellation(win, back);
  CHECK(t1.cell == t2.cell);
  CHECK(t1.dist == t2.dist);

  nlohmann::json j = nlohmann::json::parse(text);
  std::string prefix = j["functions"][0]["ends"][0]["prefix"].get<std::string>();
  REQUIRE(!prefix.empty());
  prefix[0] = static_cast<char>('0' + (prefix[0] - '0' + 1) % p.d);
  j["functions"][0]["ends"][0]["prefix"] = prefix;
  CHECK_THROWS_AS(ipvt_from_json(j.dump()), std::runtime_error);

  nlohmann::json dup = nlohmann::json::parse(text);
  REQUIRE(dup["functions"].size() >= 2);
  dup["functions"][1]["label"] = dup["functions"][0]["label"];
  CHECK_THROWS_AS(ipvt_from_json(dup.dump()), std::runtime_error);
}

TEST_CASE("ipvt rejects invalid inputs", "[ipvt]") {
  TreeParams p{3, 2};
  CHECK_THROWS_AS(sample_ipvt(p, -1, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_ipvt(p, 3, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_ipvt(p, 3, -1.0, 1), std::invalid_argument);

  IpvtFunction f;
  f.level = 0;
  f.label = 1;
  f.end_seeds = {5, 6};
  IpvtSample s = manual_sample(p, 2, {f});
  WindowGraph big(p, 4);  // cutoff certifies radius 2 only
  CHECK_THROWS_AS(ideal_tessellation(big, s), std::runtime_error);

  WindowGraph win(p, 2);
  IpvtSample empty;
  empty.params = p;
  empty.cutoff = 10;
  CHECK_THROWS_AS(ideal_tessellation(win, empty), std::invalid_argument);

  CHECK_THROWS_AS(wall(s, 0, 0, 2, 2), std::invalid_argument);
  CHECK_THROWS_AS(wall(s, 0, 5, 2, 2), std::invalid_argument);
  IpvtFunction g = f;
  g.label = 2;
  g.end_seeds = {7, 8};
  IpvtSample two = manual_sample(p, 2, {f, g});
  CHECK_THROWS_AS(wall(two, 0, 1, 1, 2), std::invalid_argument);

  // Unsorted manual function lists are rejected.
  IpvtSample bad = two;
  std::swap(bad.functions[0], bad.functions[1]);
  CHECK_THROWS_AS(ideal_tessellation(win, bad), std::invalid_argument);
}
