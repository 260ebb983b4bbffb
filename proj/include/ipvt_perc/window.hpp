#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ipvt_perc/tree_graph.hpp"

namespace ipvt_perc {

// Materialized ball B_R(o) of the k-fold product, indexed in canonical order
// (the exact order ball_enumerate streams), with CSR adjacency and O(k R)
// index<->vertex conversion done arithmetically from layer composition
// counts. Index 0 is the origin; layer q occupies [ball_count(q-1),
// ball_count(q)). The index of a vertex does not depend on the radius, so a
// smaller window's indexing is a prefix of a larger one's.
class WindowGraph {
 public:
  static constexpr std::uint32_t npos = 0xFFFFFFFFu;

  WindowGraph(const TreeParams& params, int radius) : params_(params), radius_(radius) {
    validate(params_);
    if (radius < 0 || radius > 200) throw std::invalid_argument("window radius out of range");
    uint128 total = ball_size(params_, radius_);
    if (total > (uint128{1} << 27)) throw std::runtime_error("window exceeds supported size");
    std::uint64_t degreeFull = static_cast<std::uint64_t>(params_.k) * params_.d;
    if (static_cast<std::uint64_t>(total) * degreeFull > (std::uint64_t{1} << 31))
      throw std::runtime_error("window adjacency exceeds supported size");
    build_tables();
    build_adjacency();
  }

  const TreeParams& params() const { return params_; }
  int radius() const { return radius_; }
  std::uint32_t size() const { return static_cast<std::uint32_t>(ballOffset_[radius_ + 1]); }
  int degree_full() const { return params_.k * params_.d; }

  // Number of vertices at distance <= r from the origin.
  std::uint32_t ball_count(int r) const {
    if (r < 0) return 0;
    if (r > radius_) throw std::invalid_argument("ball_count radius exceeds window radius");
    return static_cast<std::uint32_t>(ballOffset_[r + 1]);
  }

  int layer_of(std::uint32_t idx) const { return layer_[idx]; }

  Vertex vertex(std::uint32_t idx) const {
    if (idx >= size()) throw std::out_of_range("window index out of range");
    int q = layer_[idx];
    std::uint64_t r = idx - ballOffset_[q];
    Vertex v;
    v.coords.resize(params_.k);
    int rem = q;
    for (int i = 0; i < params_.k; ++i) {
      const std::vector<std::uint64_t>& tail = prod_[params_.k - 1 - i];
      int qi = 0;
      while (true) {
        std::uint64_t block = s1_[qi] * tail[rem - qi];
        if (r < block) break;
        r -= block;
        ++qi;
      }
      std::uint64_t cnt = tail[rem - qi];
      v.coords[i] = word_of_rank(qi, r / cnt);
      r %= cnt;
      rem -= qi;
    }
    return v;
  }

  // Canonical index, or npos when the vertex lies outside the window.
  std::uint32_t try_index_of(const Vertex& v) const {
    if (!is_valid_vertex(params_, v)) throw std::invalid_argument("vertex invalid for TreeParams");
    long long q = vertex_norm(v);
    if (q > radius_) return npos;
    return static_cast<std::uint32_t>(ballOffset_[q] + rank_in_layer(v, static_cast<int>(q)));
  }

  std::uint32_t index_of(const Vertex& v) const {
    std::uint32_t idx = try_index_of(v);
    if (idx == npos) throw std::out_of_range("vertex outside window");
    return idx;
  }

  bool contains(const Vertex& v) const { return try_index_of(v) != npos; }

  // Index from per-coordinate (depth, within-depth word rank) pairs; the
  // arithmetic twin of index_of for callers that enumerate words by rank
  // instead of materializing them. Within a depth t the rank of a word is
  // w[0]*(d-1)^{t-1} + sum_j w[j]*(d-1)^{t-1-j}.
  std::uint32_t index_by_rank(const int* depth, const std::uint64_t* wordRank) const {
    int q = 0;
    for (int i = 0; i < params_.k; ++i) q += depth[i];
    if (q > radius_) throw std::out_of_range("depth sum exceeds window radius");
    std::uint64_t acc = 0;
    int rem = q;
    for (int i = 0; i < params_.k; ++i) {
      int qi = depth[i];
      const std::vector<std::uint64_t>& tail = prod_[params_.k - 1 - i];
      for (int t = 0; t < qi; ++t) acc += s1_[t] * tail[rem - t];
      acc += wordRank[i] * tail[rem - qi];
      rem -= qi;
    }
    return static_cast<std::uint32_t>(ballOffset_[q] + acc);
  }

  // In-window neighbors, sorted ascending. Vertices on the boundary sphere
  // have fewer entries than degree_full().
  std::pair<const std::uint32_t*, const std::uint32_t*> neighbors(std::uint32_t idx) const {
    return {targets_.data() + offsets_[idx], targets_.data() + offsets_[idx + 1]};
  }

  int degree_in_window(std::uint32_t idx) const {
    return static_cast<int>(offsets_[idx + 1] - offsets_[idx]);
  }

  // Edges in canonical order: ascending lower endpoint, then upper endpoint.
  template <typename F>
  void for_each_edge(F&& f) const {
    for (std::uint32_t u = 0; u < size(); ++u) {
      auto [begin, end] = neighbors(u);
      for (const std::uint32_t* t = begin; t != end; ++t)
        if (*t > u) f(u, *t);
    }
  }

  std::uint64_t edge_count() const { return targets_.size() / 2; }

 private:
  void build_tables() {
    int R = radius_;
    s1_.assign(R + 1, 0);
    s1_[0] = 1;
    for (int q = 1; q <= R; ++q)
      s1_[q] = (q == 1) ? params_.d : s1_[q - 1] * (params_.d - 1);
    powD1_.assign(R + 1, 0);
    powD1_[0] = 1;
    for (int q = 1; q <= R; ++q) powD1_[q] = powD1_[q - 1] * (params_.d - 1);

    prod_.assign(params_.k + 1, std::vector<std::uint64_t>(R + 1, 0));
    prod_[0][0] = 1;
    for (int j = 1; j <= params_.k; ++j)
      for (int q = 0; q <= R; ++q) {
        std::uint64_t acc = 0;
        for (int t = 0; t <= q; ++t) acc += s1_[t] * prod_[j - 1][q - t];
        prod_[j][q] = acc;
      }

    ballOffset_.assign(R + 2, 0);
    for (int q = 0; q <= R; ++q) ballOffset_[q + 1] = ballOffset_[q] + prod_[params_.k][q];

    layer_.resize(ballOffset_[R + 1]);
    for (int q = 0; q <= R; ++q)
      std::fill(layer_.begin() + ballOffset_[q], layer_.begin() + ballOffset_[q + 1],
                static_cast<std::uint8_t>(q));
  }

  std::uint64_t word_lex_rank(const Word& w) const {
    if (w.empty()) return 0;
    std::uint64_t r = static_cast<std::uint64_t>(w[0]) * powD1_[w.size() - 1];
    for (std::size_t j = 1; j < w.size(); ++j)
      r += static_cast<std::uint64_t>(w[j]) * powD1_[w.size() - 1 - j];
    return r;
  }

  Word word_of_rank(int len, std::uint64_t rank) const {
    Word w(len);
    for (int j = 0; j < len; ++j) {
      std::uint64_t weight = powD1_[len - 1 - j];
      w[j] = static_cast<std::uint8_t>(rank / weight);
      rank %= weight;
    }
    return w;
  }

  // Rank within layer q: composition order over coordinate depths, words
  // lexicographic within a depth; matches ball_enumerate.
  std::uint64_t rank_in_layer(const Vertex& v, int q) const {
    std::uint64_t acc = 0;
    int rem = q;
    for (int i = 0; i < params_.k; ++i) {
      int qi = static_cast<int>(v.coords[i].size());
      const std::vector<std::uint64_t>& tail = prod_[params_.k - 1 - i];
      for (int t = 0; t < qi; ++t) acc += s1_[t] * tail[rem - t];
      acc += word_lex_rank(v.coords[i]) * tail[rem - qi];
      rem -= qi;
    }
    return acc;
  }

  void build_adjacency() {
    std::uint32_t V = size();
    std::vector<std::uint32_t> degree(V, 0);
    Vertex scratch;
    // Every edge joins a vertex to a coordinate parent one layer down; two
    // enumeration passes (count, fill) avoid a temporary edge list.
    auto forEachParent = [&](const Vertex& v, std::uint32_t idx, auto&& fn) {
      (void)idx;
      for (int i = 0; i < params_.k; ++i) {
        if (v.coords[i].empty()) continue;
        scratch = v;
        scratch.coords[i].pop_back();
        long long q = vertex_norm(scratch);
        std::uint32_t p = static_cast<std::uint32_t>(
            ballOffset_[q] + rank_in_layer(scratch, static_cast<int>(q)));
        fn(p);
      }
    };

    std::uint32_t counter = 0;
    ball_enumerate(params_, radius_, [&](const Vertex& v) {
      std::uint32_t idx = counter++;
      forEachParent(v, idx, [&](std::uint32_t p) {
        ++degree[idx];
        ++degree[p];
      });
    });

    offsets_.assign(V + 1, 0);
    for (std::uint32_t u = 0; u < V; ++u) offsets_[u + 1] = offsets_[u] + degree[u];
    targets_.assign(offsets_[V], 0);
    std::vector<std::uint64_t> cursor(offsets_.begin(), offsets_.end() - 1);

    std::vector<std::uint32_t> parents;
    counter = 0;
    ball_enumerate(params_, radius_, [&](const Vertex& v) {
      std::uint32_t idx = counter++;
      parents.clear();
      forEachParent(v, idx, [&](std::uint32_t p) { parents.push_back(p); });
      std::sort(parents.begin(), parents.end());
      // Parents precede children in each list: parents are appended now in
      // sorted order, children later in ascending enumeration order.
      for (std::uint32_t p : parents) {
        targets_[cursor[idx]++] = p;
        targets_[cursor[p]++] = idx;
      }
    });
  }

  TreeParams params_;
  int radius_;
  std::vector<std::uint64_t> s1_;
  std::vector<std::uint64_t> powD1_;
  std::vector<std::vector<std::uint64_t>> prod_;
  std::vector<std::uint64_t> ballOffset_;
  std::vector<std::uint8_t> layer_;
  std::vector<std::uint64_t> offsets_;
  std::vector<std::uint32_t> targets_;
};

// A seed for the multi-source assignment: `source` reaches `vertex` at the
// given cost before any edge is crossed. Several seeds may share a source.
struct SourceSeed {
  std::uint32_t vertex;
  std::uint32_t source;
  std::int32_t cost;
};

// K cheapest distinct sources per vertex, ties broken by source label. Slots
// are sorted by (cost, label); unused slots hold owner == npos.
template <int K>
struct AssignField {
  static constexpr std::uint32_t npos = WindowGraph::npos;

  std::vector<std::int32_t> cost;    // K entries per vertex
  std::vector<std::uint32_t> owner;  // K entries per vertex

  int slot_count(std::uint32_t v) const {
    int n = 0;
    while (n < K && owner[static_cast<std::size_t>(v) * K + n] != npos) ++n;
    return n;
  }

  std::int32_t cost_at(std::uint32_t v, int slot) const {
    return cost[static_cast<std::size_t>(v) * K + slot];
  }
  std::uint32_t owner_at(std::uint32_t v, int slot) const {
    return owner[static_cast<std::size_t>(v) * K + slot];
  }

  bool has_source(std::uint32_t v, std::uint32_t src) const {
    for (int s = 0; s < K; ++s)
      if (owner[static_cast<std::size_t>(v) * K + s] == src) return true;
    return false;
  }

  // First slot owned by neither a nor b; {cost, npos} when none exists.
  std::pair<std::int32_t, std::uint32_t> best_excluding(std::uint32_t v, std::uint32_t a,
                                                        std::uint32_t b) const {
    for (int s = 0; s < K; ++s) {
      std::uint32_t w = owner[static_cast<std::size_t>(v) * K + s];
      if (w == npos) break;
      if (w != a && w != b) return {cost[static_cast<std::size_t>(v) * K + s], w};
    }
    return {std::numeric_limits<std::int32_t>::max(), npos};
  }
};

// A seed expressed directly on window indices, for scheduled seeding where
// the cost is implied by the bucket being filled.
struct IndexSeed {
  std::uint32_t vertex;
  std::uint32_t source;
};

// Multi-source shortest paths with uniform positive integer edge weight,
// keeping the K best distinct sources per vertex under lexicographic
// (cost, label) order. Labels must be pairwise distinct; that makes the
// result unique. Bucket processing is exact because an edge weight >= 1
// cannot create same-bucket cascades, and a source that is among the K best
// at a vertex is among the K best at some predecessor on each geodesic, so
// per-vertex top-K pruning never discards a winner.
//
// Seeds arrive lazily: provider(c, out) is called once per cost c in
// [min_cost, max_seed_cost] ascending, when the bucket for c is about to be
// processed, and appends the seeds of exactly that cost. Seeds that can no
// longer enter their vertex's slots are dropped on arrival, so a provider
// may emit generously. Slots are append-only, so once every vertex holds K
// owners the field is final and the remaining costs are never requested;
// providers whose seed mass grows with cost rely on this early exit.
template <int K, typename Provider>
AssignField<K> multi_source_assign_scheduled(const WindowGraph& win, std::int32_t min_cost,
                                             std::int32_t max_seed_cost,
                                             const std::vector<std::uint64_t>& labels,
                                             int edge_weight, Provider&& provider) {
  static_assert(K >= 1 && K <= 8);
  if (edge_weight < 1 || edge_weight > 8)
    throw std::invalid_argument("edge weight must be in [1, 8]");
  if (min_cost > max_seed_cost) throw std::invalid_argument("seed cost range is empty");
  if (labels.empty()) throw std::invalid_argument("multi_source_assign needs source labels");
  {
    std::vector<std::uint64_t> sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("source labels must be distinct");
  }

  const std::uint32_t V = win.size();
  std::int64_t range = static_cast<std::int64_t>(max_seed_cost) - min_cost +
                       static_cast<std::int64_t>(edge_weight) * (2LL * win.radius() + 1);
  if (range > (1 << 24)) throw std::runtime_error("seed cost spread too large for bucket queue");

  AssignField<K> field;
  field.cost.assign(static_cast<std::size_t>(V) * K, std::numeric_limits<std::int32_t>::max());
  field.owner.assign(static_cast<std::size_t>(V) * K, WindowGraph::npos);

  std::vector<std::vector<IndexSeed>> buckets(static_cast<std::size_t>(range) + 1);

  constexpr std::uint32_t kNone = WindowGraph::npos;
  auto slotBase = [&](std::uint32_t v) { return static_cast<std::size_t>(v) * K; };
  // True when (c, label of src) cannot enter v's slots any more.
  auto hopeless = [&](std::uint32_t v, std::uint32_t src, std::int32_t c) {
    std::size_t base = slotBase(v);
    for (int s = 0; s < K; ++s) {
      std::uint32_t w = field.owner[base + s];
      if (w == kNone) break;
      if (w == src) return true;
    }
    std::uint32_t last = field.owner[base + K - 1];
    if (last == kNone) return false;
    std::int32_t lastCost = field.cost[base + K - 1];
    if (lastCost != c) return lastCost < c;
    return labels[last] < labels[src];
  };

  bool anySeed = false;
  std::size_t filled = 0;
  const std::size_t allSlots = static_cast<std::size_t>(V) * K;
  std::vector<IndexSeed> incoming;
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    if (filled == allSlots) break;
    std::vector<IndexSeed> items = std::move(buckets[b]);
    buckets[b] = {};
    std::int64_t c64 = min_cost + static_cast<std::int64_t>(b);
    std::int32_t c = static_cast<std::int32_t>(c64);
    if (c64 <= max_seed_cost) {
      incoming.clear();
      provider(c, incoming);
      for (const IndexSeed& s : incoming) {
        if (s.vertex >= V) throw std::invalid_argument("seed vertex outside window");
        if (s.source >= labels.size()) throw std::invalid_argument("seed source has no label");
        anySeed = true;
        if (!hopeless(s.vertex, s.source, c)) items.push_back(s);
      }
    }
    if (items.empty()) continue;
    std::sort(items.begin(), items.end(), [&](const IndexSeed& x, const IndexSeed& y) {
      if (x.vertex != y.vertex) return x.vertex < y.vertex;
      return labels[x.source] < labels[y.source];
    });
    for (std::size_t i = 0; i < items.size();) {
      std::uint32_t v = items[i].vertex;
      std::size_t base = slotBase(v);
      std::size_t j = i;
      for (; j < items.size() && items[j].vertex == v; ++j) {
        std::uint32_t src = items[j].source;
        if (field.has_source(v, src)) continue;
        int slot = field.slot_count(v);
        if (slot == K) break;  // later candidates in this bucket have larger labels
        field.cost[base + slot] = c;
        field.owner[base + slot] = src;
        ++filled;
        auto [nb, ne] = win.neighbors(v);
        std::int32_t nc = c + edge_weight;
        for (const std::uint32_t* t = nb; t != ne; ++t) {
          if (hopeless(*t, src, nc)) continue;
          buckets[b + edge_weight].push_back({*t, src});
        }
      }
      while (j < items.size() && items[j].vertex == v) ++j;
      i = j;
    }
  }
  if (!anySeed) throw std::invalid_argument("multi_source_assign needs at least one seed");
  return field;
}

// Upfront-seed entry point: buckets the given seeds by cost and runs the
// scheduled core.
template <int K>
AssignField<K> multi_source_assign(const WindowGraph& win, const std::vector<SourceSeed>& seeds,
                                   const std::vector<std::uint64_t>& labels, int edge_weight) {
  if (seeds.empty()) throw std::invalid_argument("multi_source_assign needs at least one seed");
  std::int32_t minCost = seeds.front().cost, maxCost = seeds.front().cost;
  for (const SourceSeed& s : seeds) {
    minCost = std::min(minCost, s.cost);
    maxCost = std::max(maxCost, s.cost);
  }
  std::vector<SourceSeed> byCost = seeds;
  std::stable_sort(byCost.begin(), byCost.end(),
                   [](const SourceSeed& a, const SourceSeed& b) { return a.cost < b.cost; });
  std::size_t cursor = 0;
  auto provider = [&](std::int32_t c, std::vector<IndexSeed>& out) {
    while (cursor < byCost.size() && byCost[cursor].cost == c) {
      out.push_back({byCost[cursor].vertex, byCost[cursor].source});
      ++cursor;
    }
  };
  return multi_source_assign_scheduled<K>(win, minCost, maxCost, labels, edge_weight, provider);
}

}  // namespace ipvt_perc
