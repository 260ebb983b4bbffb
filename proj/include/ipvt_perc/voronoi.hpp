#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ipvt_perc/int128.hpp"
#include "ipvt_perc/log.hpp"
#include "ipvt_perc/rng.hpp"
#include "ipvt_perc/tree_graph.hpp"
#include "ipvt_perc/window.hpp"

namespace ipvt_perc {

struct LabeledNucleus {
  std::uint32_t vertex;  // window index
  std::uint64_t label;   // tie-break key, pairwise distinct
};

struct NucleusSample {
  std::vector<LabeledNucleus> nuclei;
  std::uint32_t label_collisions = 0;
};

namespace detail {
inline constexpr std::uint64_t kLabelRepairTag = 0x4C41424Cull;  // "LABL"
}

// lambda-Bernoulli nuclei with iid uniform labels, drawn in canonical vertex
// order. Every vertex consumes exactly two u64 draws (inclusion, label)
// whether or not it is retained, so the sample over a larger window extends
// the sample over a smaller one without perturbing it. Duplicate labels are
// redrawn from a per-vertex substream; earlier vertices keep their label, so
// repair is also extension-stable.
inline NucleusSample sample_bernoulli_nuclei(const WindowGraph& win, double lambda,
                                             std::uint64_t seed) {
  uint128 threshold = bernoulli_threshold(lambda);
  RandomStream stream(seed);
  NucleusSample out;
  std::unordered_set<std::uint64_t> used;
  for (std::uint32_t idx = 0; idx < win.size(); ++idx) {
    std::uint64_t inclusion = stream.next_u64();
    std::uint64_t label = stream.next_u64();
    if (uint128{inclusion} >= threshold) continue;
    std::uint64_t attempt = 0;
    while (used.count(label) != 0) {
      ++out.label_collisions;
      label = derive_seed(seed, {detail::kLabelRepairTag, idx, ++attempt});
    }
    used.insert(label);
    out.nuclei.push_back({idx, label});
  }
  return out;
}

struct Tessellation {
  std::vector<std::uint32_t> cell;      // index into the nucleus vector
  std::vector<std::int32_t> dist;       // graph distance to the owning nucleus
  std::vector<std::uint8_t> certified;  // cell provably unaffected by unsampled nuclei
  int certified_radius = -1;            // largest r with all of B_r certified

  bool same_cell(std::uint32_t u, std::uint32_t v) const { return cell[u] == cell[v]; }
};

// Cells of the window under (distance, label) lexicographic argmin over the
// sampled nuclei. A vertex v is certified when dist(v) + |v| <= window
// radius: any nucleus outside the window would sit at distance
// >= radius+1-|v| > dist(v), strictly, so neither the owner nor the full
// comparison order at v can change in any extension of the sample.
inline Tessellation build_tessellation(const WindowGraph& win,
                                       const std::vector<LabeledNucleus>& nuclei) {
  if (nuclei.empty()) throw std::invalid_argument("tessellation needs at least one nucleus");
  std::vector<std::uint64_t> labels(nuclei.size());
  std::vector<SourceSeed> seeds(nuclei.size());
  for (std::size_t i = 0; i < nuclei.size(); ++i) {
    labels[i] = nuclei[i].label;
    seeds[i] = {nuclei[i].vertex, static_cast<std::uint32_t>(i), 0};
  }
  AssignField<1> field = multi_source_assign<1>(win, seeds, labels, 1);

  Tessellation tess;
  std::uint32_t V = win.size();
  int L = win.radius();
  tess.cell = std::move(field.owner);
  tess.dist = std::move(field.cost);
  tess.certified.assign(V, 0);
  int cert = L;
  for (std::uint32_t v = 0; v < V; ++v) {
    int layer = win.layer_of(v);
    if (tess.dist[v] + layer <= L) {
      tess.certified[v] = 1;
    } else {
      cert = std::min(cert, layer - 1);
    }
  }
  tess.certified_radius = cert;
  return tess;
}

struct CertifiedTessellation {
  WindowGraph window;
  NucleusSample sample;
  Tessellation tess;
  int margin = 0;
};

// Smallest margin whose nucleus count makes an uncovered B_R vertex unlikely:
// union bound ball(R) * exp(-lambda ball(M)) <= e^-2; retries grow it by one.
inline int initial_margin(const TreeParams& params, double lambda, int R) {
  long double target = std::log(static_cast<long double>(ball_size(params, R))) + 2.0L;
  int M = 3;
  while (M < R + 512) {
    long double mass = lambda * static_cast<long double>(ball_size(params, M));
    if (mass >= target) break;
    ++M;
  }
  return M;
}

// Tessellation of B_{R+M} whose restriction to B_R is certified exact for the
// infinite-volume process. The margin grows by one until certification reaches
// R; sampling is extension-stable, so the result depends only on the final
// margin and the seed.
inline CertifiedTessellation certified_window_tessellation(const TreeParams& params, double lambda,
                                                           int R, std::uint64_t seed) {
  validate(params);
  if (R < 0) throw std::invalid_argument("radius must be >= 0");
  int margin = initial_margin(params, lambda, R);
  int cap = R + 512;
  int achieved = -1;
  while (true) {
    WindowGraph win(params, R + margin);
    NucleusSample sample = sample_bernoulli_nuclei(win, lambda, seed);
    if (!sample.nuclei.empty()) {
      Tessellation tess = build_tessellation(win, sample.nuclei);
      achieved = tess.certified_radius;
      IPVT_PERC_LOG_DEBUG("tessellation margin=%d nuclei=%zu certified=%d target=%d", margin,
                          sample.nuclei.size(), achieved, R);
      if (achieved >= R)
        return {std::move(win), std::move(sample), std::move(tess), margin};
    }
    if (margin >= cap)
      throw std::runtime_error("tessellation margin cap reached; certified radius " +
                               std::to_string(achieved) + " of requested " + std::to_string(R));
    margin = std::min(margin + 1, cap);
  }
}

struct DelaunayEdge {
  std::uint32_t a, b;  // nucleus indices, a < b
  bool certified;      // witnessed by an edge whose endpoints are both certified
};

// Pairs of distinct cells joined by at least one window edge. A pair is
// certified when some witnessing edge has both endpoints certified; such a
// pair is present in the infinite-volume tessellation as well.
inline std::vector<DelaunayEdge> delaunay_adjacency(const WindowGraph& win,
                                                    const Tessellation& tess) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> plain, cert;
  win.for_each_edge([&](std::uint32_t u, std::uint32_t v) {
    std::uint32_t cu = tess.cell[u], cv = tess.cell[v];
    if (cu == cv) return;
    auto key = std::minmax(cu, cv);
    plain.emplace_back(key.first, key.second);
    if (tess.certified[u] && tess.certified[v]) cert.emplace_back(key.first, key.second);
  });
  auto dedupe = [](std::vector<std::pair<std::uint32_t, std::uint32_t>>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  dedupe(plain);
  dedupe(cert);
  std::vector<DelaunayEdge> out;
  out.reserve(plain.size());
  std::size_t ci = 0;
  for (auto& pr : plain) {
    while (ci < cert.size() && cert[ci] < pr) ++ci;
    out.push_back({pr.first, pr.second, ci < cert.size() && cert[ci] == pr});
  }
  return out;
}

// One bit per canonical edge of B_r (edges of the window whose endpoints both
// lie in B_r), packed MSB-first into lowercase hex, zero-padded at the tail.
template <typename EdgeBit>
std::string bond_hex(const WindowGraph& win, int r, EdgeBit&& bit) {
  std::uint32_t cut = win.ball_count(r);
  std::string out;
  int nibble = 0, filled = 0;
  win.for_each_edge([&](std::uint32_t u, std::uint32_t v) {
    if (v >= cut) return;
    nibble = (nibble << 1) | (bit(u, v) ? 1 : 0);
    if (++filled == 4) {
      out.push_back("0123456789abcdef"[nibble]);
      nibble = 0;
      filled = 0;
    }
  });
  if (filled > 0) out.push_back("0123456789abcdef"[nibble << (4 - filled)]);
  return out;
}

}  // namespace ipvt_perc
