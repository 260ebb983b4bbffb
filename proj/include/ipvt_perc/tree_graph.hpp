#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ipvt_perc/int128.hpp"

namespace ipvt_perc {

// The k-fold product of d-regular infinite trees, vertices addressed by words.
//
// Each factor tree is rooted at the empty word. The root has d children with
// letters 0..d-1; every other vertex has one parent (drop the last letter) and
// d-1 children with letters 0..d-2. This addressing makes every vertex of T_d
// a unique word, and graph distance between words u, v equals
// |u| + |v| - 2 lcp(u, v). A product vertex is a k-tuple of words; edges move
// exactly one coordinate to a parent or child, so the product distance is the
// sum of the coordinate distances.

struct TreeParams {
  int d = 3;  // factor tree degree, >= 3
  int k = 1;  // number of factors, >= 1
};

inline void validate(const TreeParams& params) {
  if (params.d < 3 || params.d > 200) throw std::invalid_argument("tree degree d must lie in [3,200]");
  if (params.k < 1 || params.k > 8) throw std::invalid_argument("product arity k must lie in [1,8]");
}

using Word = std::vector<std::uint8_t>;

struct Vertex {
  std::vector<Word> coords;

  bool operator==(const Vertex&) const = default;
};

inline bool is_valid_word(const TreeParams& params, const Word& w) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    int bound = (i == 0) ? params.d : params.d - 1;
    if (w[i] >= bound) return false;
  }
  return true;
}

inline bool is_valid_vertex(const TreeParams& params, const Vertex& v) {
  if (static_cast<int>(v.coords.size()) != params.k) return false;
  for (const Word& w : v.coords)
    if (!is_valid_word(params, w)) return false;
  return true;
}

inline Vertex origin(const TreeParams& params) {
  Vertex v;
  v.coords.resize(params.k);
  return v;
}

inline std::size_t word_lcp(const Word& a, const Word& b) {
  std::size_t n = std::min(a.size(), b.size());
  std::size_t i = 0;
  while (i < n && a[i] == b[i]) ++i;
  return i;
}

inline long long tree_distance(const Word& a, const Word& b) {
  return static_cast<long long>(a.size() + b.size()) - 2 * static_cast<long long>(word_lcp(a, b));
}

inline long long vertex_norm(const Vertex& v) {
  long long n = 0;
  for (const Word& w : v.coords) n += static_cast<long long>(w.size());
  return n;
}

inline long long vertex_distance(const TreeParams& params, const Vertex& u, const Vertex& v) {
  if (static_cast<int>(u.coords.size()) != params.k || static_cast<int>(v.coords.size()) != params.k)
    throw std::invalid_argument("vertex arity does not match TreeParams.k");
  long long total = 0;
  for (int i = 0; i < params.k; ++i) total += tree_distance(u.coords[i], v.coords[i]);
  return total;
}

// Canonical orders. Words compare shortlex (length, then letters); vertices
// compare by (distance to a center, then the coordinate word tuple
// lexicographically). Enumeration, nucleus draws, and bond-edge order all use
// this single ordering.
inline bool word_shortlex_less(const Word& a, const Word& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

inline bool tuple_less(const Vertex& u, const Vertex& v) {
  for (std::size_t i = 0; i < u.coords.size(); ++i) {
    if (u.coords[i] != v.coords[i]) return word_shortlex_less(u.coords[i], v.coords[i]);
  }
  return false;
}

inline bool vertex_canonical_less(const TreeParams& params, const Vertex& center, const Vertex& u,
                                  const Vertex& v) {
  long long du = vertex_distance(params, center, u);
  long long dv = vertex_distance(params, center, v);
  if (du != dv) return du < dv;
  return tuple_less(u, v);
}

// Visits the <= 2k product neighbors (each coordinate: parent plus children).
inline void for_each_neighbor(const TreeParams& params, const Vertex& v,
                              const std::function<void(const Vertex&)>& visit) {
  Vertex scratch = v;
  for (int i = 0; i < params.k; ++i) {
    Word& w = scratch.coords[i];
    if (!w.empty()) {
      std::uint8_t last = w.back();
      w.pop_back();
      visit(scratch);
      w.push_back(last);
    }
    int childAlphabet = w.empty() ? params.d : params.d - 1;
    for (int letter = 0; letter < childAlphabet; ++letter) {
      w.push_back(static_cast<std::uint8_t>(letter));
      visit(scratch);
      w.pop_back();
    }
  }
}

namespace detail {

// Single-tree sphere sizes s(0)=1, s(q)=d(d-1)^{q-1}.
inline std::vector<uint128> tree_sphere_sizes(int d, int maxq) {
  std::vector<uint128> s(static_cast<std::size_t>(maxq) + 1);
  s[0] = 1;
  if (maxq >= 1) s[1] = static_cast<uint128>(d);
  for (int q = 2; q <= maxq; ++q) s[q] = checked_mul(s[q - 1], static_cast<uint128>(d - 1));
  return s;
}

// Product sphere sizes by convolution over the factors.
inline std::vector<uint128> product_sphere_sizes(const TreeParams& params, int maxq) {
  std::vector<uint128> acc = tree_sphere_sizes(params.d, maxq);
  const std::vector<uint128> single = acc;
  for (int factor = 2; factor <= params.k; ++factor) {
    std::vector<uint128> next(static_cast<std::size_t>(maxq) + 1, 0);
    for (int q = 0; q <= maxq; ++q) {
      uint128 total = 0;
      for (int t = 0; t <= q; ++t) total = checked_add(total, checked_mul(acc[q - t], single[t]));
      next[q] = total;
    }
    acc = std::move(next);
  }
  return acc;
}

}  // namespace detail

inline uint128 sphere_size(const TreeParams& params, int q) {
  validate(params);
  if (q < 0) throw std::invalid_argument("sphere radius must be >= 0");
  return detail::product_sphere_sizes(params, q)[q];
}

inline uint128 ball_size(const TreeParams& params, int q) {
  validate(params);
  if (q < 0) throw std::invalid_argument("ball radius must be >= 0");
  auto spheres = detail::product_sphere_sizes(params, q);
  uint128 total = 0;
  for (int t = 0; t <= q; ++t) total = checked_add(total, spheres[t]);
  return total;
}

// Largest t with |B_t(o)| <= 1/lambda. Guarded by r_max: nucleus spacing
// beyond that is outside any supported window anyway.
inline int threshold_radius(const TreeParams& params, double lambda, int r_max = 64) {
  validate(params);
  if (!(lambda > 0.0) || lambda > 1.0) throw std::invalid_argument("lambda must lie in (0,1]");
  long double budget = 1.0L / static_cast<long double>(lambda);
  int t = 0;
  uint128 ball = 1;
  auto spheres = detail::product_sphere_sizes(params, r_max + 1);
  while (t < r_max) {
    uint128 nextBall = checked_add(ball, spheres[t + 1]);
    if (static_cast<long double>(nextBall) > budget) break;
    ball = nextBall;
    ++t;
  }
  if (t == r_max) throw std::runtime_error("threshold_radius exceeds the r_max guard");
  return t;
}

namespace detail {

// Words of T_d at each depth 0..maxDepth, lexicographic within a depth.
// Children of lex-ordered parents in letter order stay lex-ordered.
inline std::vector<std::vector<Word>> words_by_depth(int d, int maxDepth) {
  std::vector<std::vector<Word>> levels(static_cast<std::size_t>(maxDepth) + 1);
  levels[0].push_back(Word{});
  for (int q = 1; q <= maxDepth; ++q) {
    const auto& prev = levels[q - 1];
    auto& cur = levels[q];
    int alphabet = (q == 1) ? d : d - 1;
    cur.reserve(prev.size() * static_cast<std::size_t>(alphabet));
    for (const Word& parent : prev) {
      for (int letter = 0; letter < alphabet; ++letter) {
        Word child = parent;
        child.push_back(static_cast<std::uint8_t>(letter));
        cur.push_back(std::move(child));
      }
    }
  }
  return levels;
}

inline void enumerate_sphere_rec(const std::vector<std::vector<Word>>& levels, int k, int coord,
                                 int budget, Vertex& scratch,
                                 const std::function<void(const Vertex&)>& visit) {
  if (coord == k - 1) {
    for (const Word& w : levels[budget]) {
      scratch.coords[coord] = w;
      visit(scratch);
    }
    return;
  }
  for (int q = 0; q <= budget; ++q) {
    for (const Word& w : levels[q]) {
      scratch.coords[coord] = w;
      enumerate_sphere_rec(levels, k, coord + 1, budget - q, scratch, visit);
    }
  }
}

}  // namespace detail

// Streams B_R(o) in canonical order: distance ascending, then the word tuple
// lexicographically (shortlex per word). The output for radius R is a prefix
// of the output for any larger radius.
inline void ball_enumerate(const TreeParams& params, int R,
                           const std::function<void(const Vertex&)>& visit) {
  validate(params);
  if (R < 0) throw std::invalid_argument("ball radius must be >= 0");
  auto levels = detail::words_by_depth(params.d, R);
  Vertex scratch = origin(params);
  for (int q = 0; q <= R; ++q)
    detail::enumerate_sphere_rec(levels, params.k, 0, q, scratch, visit);
}

inline std::vector<Vertex> ball_vertices(const TreeParams& params, int R) {
  std::vector<Vertex> out;
  ball_enumerate(params, R, [&](const Vertex& v) { out.push_back(v); });
  return out;
}

// Digit-string word syntax used by the CLI and serialized samples: letters as
// single decimal digits, "-" for the empty word, coordinates joined by ",".
// Restricted to d <= 10 so a letter is always one digit.
inline std::string word_to_string(const Word& w) {
  if (w.empty()) return "-";
  std::string s;
  s.reserve(w.size());
  for (std::uint8_t letter : w) s.push_back(static_cast<char>('0' + letter));
  return s;
}

inline Word parse_word(const TreeParams& params, std::string_view text) {
  if (params.d > 10) throw std::invalid_argument("digit word syntax requires d <= 10");
  Word w;
  if (text == "-" || text.empty()) return w;
  w.reserve(text.size());
  for (char c : text) {
    if (c < '0' || c > '9') throw std::invalid_argument("word letters must be decimal digits");
    w.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  if (!is_valid_word(params, w)) throw std::invalid_argument("word letter out of range for degree d");
  return w;
}

inline std::string vertex_to_string(const Vertex& v) {
  std::string s;
  for (std::size_t i = 0; i < v.coords.size(); ++i) {
    if (i > 0) s.push_back(',');
    s += word_to_string(v.coords[i]);
  }
  return s;
}

inline Vertex parse_vertex(const TreeParams& params, std::string_view text) {
  Vertex v;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = text.find(',', start);
    std::string_view piece =
        comma == std::string_view::npos ? text.substr(start) : text.substr(start, comma - start);
    v.coords.push_back(parse_word(params, piece));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (!is_valid_vertex(params, v))
    throw std::invalid_argument("vertex does not have k valid coordinate words");
  return v;
}

}  // namespace ipvt_perc
