#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ipvt_perc/rng.hpp"
#include "ipvt_perc/tree_graph.hpp"
#include "ipvt_perc/voronoi.hpp"
#include "ipvt_perc/window.hpp"

namespace ipvt_perc {

// One u64 draw per cell in nucleus order; extension-stable the same way the
// nucleus sample is. p may be 0 or 1.
inline std::vector<std::uint8_t> color_cells(std::size_t n_cells, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("retention probability must be in [0,1]");
  uint128 threshold = p > 0.0 ? bernoulli_threshold(p) : uint128{0};
  RandomStream stream(seed);
  std::vector<std::uint8_t> black(n_cells, 0);
  for (std::size_t i = 0; i < n_cells; ++i)
    black[i] = uint128{stream.next_u64()} < threshold ? 1 : 0;
  return black;
}

// Borrows the window and tessellation; keep both alive while using this.
struct ColoredTessellation {
  const WindowGraph* win = nullptr;
  const Tessellation* tess = nullptr;
  double p = 0.0;
  std::vector<std::uint8_t> cell_black;  // per nucleus
  std::vector<std::uint8_t> black;       // per vertex
  std::vector<std::uint32_t> cluster;    // per vertex; npos on white vertices
  std::uint32_t n_clusters = 0;

  bool connected(std::uint32_t u, std::uint32_t v) const {
    return black[u] && black[v] && cluster[u] == cluster[v];
  }
};

namespace detail {

// Connected components of the black set restricted to vertices in layers
// <= maxLayer, ids in canonical (first-vertex) order.
inline std::uint32_t black_components(const WindowGraph& win, const std::vector<std::uint8_t>& black,
                                      int maxLayer, std::vector<std::uint32_t>& cluster) {
  std::uint32_t V = win.size();
  cluster.assign(V, WindowGraph::npos);
  std::vector<std::uint32_t> stack;
  std::uint32_t next = 0;
  for (std::uint32_t v = 0; v < V; ++v) {
    if (!black[v] || cluster[v] != WindowGraph::npos || win.layer_of(v) > maxLayer) continue;
    std::uint32_t id = next++;
    cluster[v] = id;
    stack.assign(1, v);
    while (!stack.empty()) {
      std::uint32_t u = stack.back();
      stack.pop_back();
      auto [nb, ne] = win.neighbors(u);
      for (const std::uint32_t* t = nb; t != ne; ++t) {
        if (!black[*t] || cluster[*t] != WindowGraph::npos || win.layer_of(*t) > maxLayer) continue;
        cluster[*t] = id;
        stack.push_back(*t);
      }
    }
  }
  return next;
}

}  // namespace detail

// Colors every cell black independently with probability p and extracts the
// connected components of the black vertex set across window edges.
inline ColoredTessellation color_and_cluster(const WindowGraph& win, const Tessellation& tess,
                                             double p, std::vector<std::uint8_t> cellBlack) {
  ColoredTessellation ct;
  ct.win = &win;
  ct.tess = &tess;
  ct.p = p;
  ct.cell_black = std::move(cellBlack);
  std::uint32_t V = win.size();
  ct.black.resize(V);
  for (std::uint32_t v = 0; v < V; ++v) ct.black[v] = ct.cell_black[tess.cell[v]];
  ct.n_clusters = detail::black_components(win, ct.black, win.radius(), ct.cluster);
  return ct;
}

inline ColoredTessellation color_and_cluster(const WindowGraph& win, const Tessellation& tess,
                                             double p, std::uint64_t seed) {
  std::size_t cells = 0;
  for (std::uint32_t c : tess.cell) cells = std::max<std::size_t>(cells, c + 1);
  return color_and_cluster(win, tess, p, color_cells(cells, p, seed));
}

// Colors cells without extracting the global cluster structure, for event
// evaluations that run their own certified flood; `cluster` stays empty and
// n_clusters is 0.
inline ColoredTessellation color_tessellation(const WindowGraph& win, const Tessellation& tess,
                                              double p, std::uint64_t seed) {
  std::size_t cells = 0;
  for (std::uint32_t c : tess.cell) cells = std::max<std::size_t>(cells, c + 1);
  ColoredTessellation ct;
  ct.win = &win;
  ct.tess = &tess;
  ct.p = p;
  ct.cell_black = color_cells(cells, p, seed);
  std::uint32_t V = win.size();
  ct.black.resize(V);
  for (std::uint32_t v = 0; v < V; ++v) ct.black[v] = ct.cell_black[tess.cell[v]];
  return ct;
}

enum class EventOutcome { Fails, Holds, Undecided };

// Local uniqueness at radius R around `center`: the black set meets
// B_R(center) and all black vertices of B_{3R}(center) lie in one cluster.
//
// Decision uses only provably-exact information. Colors inside the certified
// ball are exact, so the evaluation needs |center| + 3R <= certified radius;
// otherwise the outcome is Undecided. Connectivity is evaluated on the black
// subgraph restricted to the per-vertex certified set, which typically
// extends well beyond the certified ball toward the window edge:
//  - no black vertex in B_R: the event fails on its first clause;
//  - a single certified component covers all black of B_{3R}: connectivity
//    can only grow in the infinite volume, so the event holds;
//  - several components meet B_{3R} and at least one of them is complete
//    (every neighbor certified, none on the window edge, so its whole
//    surrounding is certified white): that one can never merge with the
//    others and the event fails;
//  - several components meet B_{3R}, all reaching uncertified territory:
//    they could all merge beyond what the window proves, so Undecided.
inline EventOutcome local_uniqueness_event(const ColoredTessellation& ct, int R,
                                           const Vertex& center) {
  const WindowGraph& win = *ct.win;
  const Tessellation& tess = *ct.tess;
  if (R < 0) throw std::invalid_argument("event radius must be >= 0");
  if (!is_valid_vertex(win.params(), center))
    throw std::invalid_argument("center invalid for TreeParams");
  int cert = tess.certified_radius;
  long long centerNorm = vertex_norm(center);
  if (centerNorm + 3LL * R > cert) return EventOutcome::Undecided;

  bool centered = centerNorm == 0;
  std::uint32_t scan = win.ball_count(static_cast<int>(std::min<long long>(
      win.radius(), centerNorm + 3LL * R)));
  auto within = [&](std::uint32_t v, long long r) {
    if (centered) return win.layer_of(v) <= r;
    return vertex_distance(win.params(), win.vertex(v), center) <= r;
  };

  bool blackNearCenter = false;
  for (std::uint32_t v = 0; v < scan && !blackNearCenter; ++v)
    if (ct.black[v] && within(v, R)) blackNearCenter = true;
  if (!blackNearCenter) return EventOutcome::Fails;

  const std::uint32_t V = win.size();
  std::vector<std::uint8_t> eligible(V);
  for (std::uint32_t v = 0; v < V; ++v) eligible[v] = ct.black[v] && tess.certified[v];
  std::vector<std::uint32_t> comp;
  std::uint32_t n = detail::black_components(win, eligible, win.radius(), comp);
  std::vector<std::uint8_t> meets(n, 0), unresolved(n, 0);
  for (std::uint32_t v = 0; v < V; ++v) {
    std::uint32_t id = comp[v];
    if (id == WindowGraph::npos) continue;
    if (v < scan && within(v, 3LL * R)) meets[id] = 1;
    if (unresolved[id]) continue;
    if (win.layer_of(v) == win.radius()) {
      unresolved[id] = 1;
      continue;
    }
    auto [nb, ne] = win.neighbors(v);
    for (const std::uint32_t* t = nb; t != ne; ++t) {
      if (!tess.certified[*t]) {
        unresolved[id] = 1;
        break;
      }
    }
  }
  std::uint32_t meeting = 0;
  bool anyResolved = false;
  for (std::uint32_t id = 0; id < n; ++id) {
    if (!meets[id]) continue;
    ++meeting;
    if (!unresolved[id]) anyResolved = true;
  }
  if (meeting == 1) return EventOutcome::Holds;
  return (meeting >= 2 && anyResolved) ? EventOutcome::Fails
                                       : EventOutcome::Undecided;
}

// Two-point connectivity: u and v are black and lie in one cluster. Colors
// and paths are read off the per-vertex certified set, so a Holds or Fails
// verdict is an infinite-volume fact:
//  - an endpoint outside the certified ball: Undecided;
//  - an endpoint white: Fails;
//  - one certified component contains both: Holds;
//  - different components and at least one of the two is complete (every
//    neighbor certified, none on the window edge): that one can never grow,
//    so Fails;
//  - different components, both reaching uncertified territory: Undecided.
inline EventOutcome two_point_event(const ColoredTessellation& ct, const Vertex& u,
                                    const Vertex& v) {
  const WindowGraph& win = *ct.win;
  const Tessellation& tess = *ct.tess;
  if (!is_valid_vertex(win.params(), u) || !is_valid_vertex(win.params(), v))
    throw std::invalid_argument("endpoint invalid for TreeParams");
  int cert = tess.certified_radius;
  if (vertex_norm(u) > cert || vertex_norm(v) > cert) return EventOutcome::Undecided;
  std::uint32_t iu = win.index_of(u);
  std::uint32_t iv = win.index_of(v);
  if (!ct.black[iu] || !ct.black[iv]) return EventOutcome::Fails;
  const std::uint32_t V = win.size();
  std::vector<std::uint8_t> eligible(V);
  for (std::uint32_t w = 0; w < V; ++w) eligible[w] = ct.black[w] && tess.certified[w];
  std::vector<std::uint32_t> comp;
  detail::black_components(win, eligible, win.radius(), comp);
  std::uint32_t cu = comp[iu];
  std::uint32_t cv = comp[iv];
  if (cu == cv) return EventOutcome::Holds;
  bool cuOpen = false, cvOpen = false;
  for (std::uint32_t w = 0; w < V; ++w) {
    if (comp[w] != cu && comp[w] != cv) continue;
    bool open = win.layer_of(w) == win.radius();
    if (!open) {
      auto [nb, ne] = win.neighbors(w);
      for (const std::uint32_t* t = nb; t != ne && !open; ++t)
        if (!tess.certified[*t]) open = true;
    }
    if (!open) continue;
    if (comp[w] == cu) cuOpen = true;
    if (comp[w] == cv) cvOpen = true;
    if (cuOpen && cvOpen) break;
  }
  return (cuOpen && cvOpen) ? EventOutcome::Undecided : EventOutcome::Fails;
}

// Time-average occupancy per cluster along a lazy reflecting simple random
// walk: each step picks one of the k*d product directions uniformly; a move
// that would leave the window stays in place instead. Returned frequencies
// are in [0,1] and sum to at most 1 (time on white vertices counts nowhere).
inline std::vector<double> cluster_frequency_srw(const ColoredTessellation& ct,
                                                 const Vertex& start, std::uint64_t steps,
                                                 RandomStream& stream) {
  const WindowGraph& win = *ct.win;
  const TreeParams& params = win.params();
  if (steps == 0) throw std::invalid_argument("walk needs at least one step");
  Vertex at = start;
  std::uint32_t idx = win.index_of(at);
  std::vector<std::uint64_t> visits(ct.n_clusters, 0);
  int d = params.d;
  for (std::uint64_t s = 0; s < steps; ++s) {
    if (ct.cluster[idx] != WindowGraph::npos) ++visits[ct.cluster[idx]];
    std::uint64_t pick = stream.next_below(static_cast<std::uint64_t>(params.k) * d);
    int coord = static_cast<int>(pick / d);
    int dir = static_cast<int>(pick % d);
    Word& w = at.coords[coord];
    if (!w.empty() && dir == 0) {
      w.pop_back();  // parent move, never leaves the window
      idx = win.index_of(at);
    } else {
      std::uint8_t letter = static_cast<std::uint8_t>(w.empty() ? dir : dir - 1);
      w.push_back(letter);
      std::uint32_t moved = win.try_index_of(at);
      if (moved == WindowGraph::npos)
        w.pop_back();  // stay put
      else
        idx = moved;
    }
  }
  std::vector<double> freq(ct.n_clusters, 0.0);
  for (std::uint32_t c = 0; c < ct.n_clusters; ++c)
    freq[c] = static_cast<double>(visits[c]) / static_cast<double>(steps);
  return freq;
}

}  // namespace ipvt_perc
