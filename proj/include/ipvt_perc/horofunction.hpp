#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ipvt_perc/rng.hpp"
#include "ipvt_perc/tree_graph.hpp"

namespace ipvt_perc {

// Horofunction machinery on T_d and its k-fold products.
//
// An end is an infinite non-backtracking ray from the root; its horofunction
// is h(v) = |v| - 2 lcp(v, ray). A finite direction c gives
// h(v) = dist(v, c) - |c|. A distance-like function is a sum of coordinate
// horofunctions plus an integer offset; all of them are 1-Lipschitz and take
// the offset value at the origin of their lowest level set.

class EndRay {
 public:
  static EndRay seeded(int degree, std::uint64_t seed) {
    EndRay ray;
    ray.degree_ = degree;
    ray.seeded_ = true;
    ray.seed_ = seed;
    return ray;
  }

  // Eventually periodic explicit ray: prefix then cycle repeated forever.
  static EndRay periodic(int degree, Word prefix, Word cycle) {
    if (cycle.empty()) throw std::invalid_argument("end ray cycle must be nonempty");
    EndRay ray;
    ray.degree_ = degree;
    ray.seeded_ = false;
    ray.prefix_ = std::move(prefix);
    ray.cycle_ = std::move(cycle);
    for (std::size_t i = 0; i < ray.prefix_.size(); ++i) {
      int bound = (i == 0) ? degree : degree - 1;
      if (ray.prefix_[i] >= bound) throw std::invalid_argument("end ray prefix letter out of range");
    }
    // Cycle letters recur at positions >= 1, so the onward-edge bound applies
    // to all of them.
    for (std::uint8_t letter : ray.cycle_)
      if (letter >= degree - 1) throw std::invalid_argument("end ray cycle letter out of range");
    return ray;
  }

  static EndRay constant(int degree, std::uint8_t letter) {
    return periodic(degree, Word{}, Word{letter});
  }

  int degree() const { return degree_; }
  bool is_seeded() const { return seeded_; }
  std::uint64_t seed() const { return seed_; }

  std::uint8_t letter(std::uint64_t index) const {
    if (seeded_) return end_ray_letter(seed_, index, degree_);
    if (index < prefix_.size()) return prefix_[index];
    return cycle_[(index - prefix_.size()) % cycle_.size()];
  }

  // Materialized prefixes are stable: letter(j) never changes once observed.
  Word prefix(std::size_t depth) const {
    Word w(depth);
    for (std::size_t i = 0; i < depth; ++i) w[i] = letter(i);
    return w;
  }

  std::size_t lcp_with(const Word& w) const {
    std::size_t i = 0;
    while (i < w.size() && letter(i) == w[i]) ++i;
    return i;
  }

  // First index where the rays differ, or guard_depth if none found.
  std::size_t divergence(const EndRay& other, std::size_t guard_depth = 4096) const {
    std::size_t i = 0;
    while (i < guard_depth && letter(i) == other.letter(i)) ++i;
    return i;
  }

 private:
  int degree_ = 3;
  bool seeded_ = true;
  std::uint64_t seed_ = 0;
  Word prefix_;
  Word cycle_;
};

struct Direction {
  enum class Kind { Finite, End } kind = Kind::End;
  Word target;  // Finite
  EndRay ray{EndRay::seeded(3, 0)};

  static Direction finite(Word w) {
    Direction dir;
    dir.kind = Kind::Finite;
    dir.target = std::move(w);
    return dir;
  }
  static Direction end(EndRay ray) {
    Direction dir;
    dir.kind = Kind::End;
    dir.ray = std::move(ray);
    return dir;
  }
};

struct DistanceLikeFunction {
  std::vector<Direction> dirs;  // one per coordinate
  long long offset = 0;         // value at the origin is offset
};

inline long long horo_coordinate(const Direction& dir, const Word& w) {
  if (dir.kind == Direction::Kind::End)
    return static_cast<long long>(w.size()) - 2 * static_cast<long long>(dir.ray.lcp_with(w));
  return tree_distance(w, dir.target) - static_cast<long long>(dir.target.size());
}

inline long long horo_eval(const TreeParams& params, const DistanceLikeFunction& f, const Vertex& v) {
  if (static_cast<int>(f.dirs.size()) != params.k || static_cast<int>(v.coords.size()) != params.k)
    throw std::invalid_argument("function/vertex arity does not match TreeParams.k");
  long long total = f.offset;
  for (int i = 0; i < params.k; ++i) total += horo_coordinate(f.dirs[i], v.coords[i]);
  return total;
}

// One end from the harmonic measure: first letter uniform on d, each later
// letter uniform on the d-1 onward edges. Consumes one u64 from the stream.
inline EndRay sample_harmonic_end(const TreeParams& params, RandomStream& stream) {
  validate(params);
  return EndRay::seeded(params.d, stream.next_u64());
}

// Harmonic mass of {psi : h^psi(v) = |v| - 2j} in a single factor, |v| = n.
// The depth-j cylinder around a word has mass 1/(d (d-1)^{j-1}); summing the
// cylinders that branch off the geodesic to v at depth exactly j gives:
inline double harmonic_slice_mass(int d, int n, int j) {
  if (j < 0 || j > n) return 0.0;
  if (n == 0) return 1.0;
  double dd = static_cast<double>(d);
  if (j == 0) return (dd - 1.0) / dd;
  if (j == n) return 1.0 / (dd * std::pow(dd - 1.0, n - 1));
  return (dd - 2.0) / (dd * std::pow(dd - 1.0, j));
}

// Default normalization of the level intensity: theta(0) = (d-2)/(d-1), so
// that theta(m) = (d-2)(d-1)^{m-1}. Only the ratio theta(m+1)/theta(m) = d-1
// is canonical; the absolute scale is configurable everywhere it is used.
inline double default_theta0(int d) {
  return static_cast<double>(d - 2) / static_cast<double>(d - 1);
}

// theta({offset <= M}) for the geometric level intensity theta(m) = theta0 (d-1)^m.
inline double theta_cumulative(int d, double theta0, long long M) {
  return theta0 * std::pow(static_cast<double>(d - 1), static_cast<double>(M + 1)) /
         static_cast<double>(d - 2);
}

// Exact measure of {f distance-like : f(o) <= m and f(v) <= m} under the
// product harmonic measure on end tuples and the geometric offset intensity.
// Decomposes over the per-coordinate lcp profile J; the profile term is
// prod_i harmonic_slice_mass * theta({l <= min(m, m - |v| + 2 sum J)}).
inline double level_set_measure(const TreeParams& params, const Vertex& v, long long m,
                                double theta0) {
  validate(params);
  if (!(theta0 > 0.0)) throw std::invalid_argument("theta0 must be positive");
  if (!is_valid_vertex(params, v)) throw std::invalid_argument("vertex invalid for TreeParams");
  long long norm = vertex_norm(v);
  std::vector<int> sizes(params.k);
  double termGuard = 1.0;
  for (int i = 0; i < params.k; ++i) {
    sizes[i] = static_cast<int>(v.coords[i].size());
    termGuard *= sizes[i] + 1;
    if (termGuard > 16777216.0) throw std::invalid_argument("level_set_measure profile too large");
  }

  std::vector<int> J(params.k, 0);
  double total = 0.0;
  while (true) {
    double mass = 1.0;
    long long sumJ = 0;
    for (int i = 0; i < params.k; ++i) {
      mass *= harmonic_slice_mass(params.d, sizes[i], J[i]);
      sumJ += J[i];
    }
    long long mJ = std::min(m, m - norm + 2 * sumJ);
    total += mass * theta_cumulative(params.d, theta0, mJ);

    int i = 0;
    while (i < params.k && J[i] == sizes[i]) {
      J[i] = 0;
      ++i;
    }
    if (i == params.k) break;
    ++J[i];
  }
  return total;
}

namespace detail {

// A vertex relative to the axis through two distinct ends: the axis position
// of its attachment point plus the non-backtracking walk from there. Walk
// moves are stored as ranks over the canonically ordered allowed moves
// (parent first, then child letters ascending, skipping forbidden edges), so
// replaying the ranks at a shifted attachment defines a tree automorphism
// that translates the axis.
struct AxisFrame {
  std::size_t meet;  // lcp of the two rays
  const EndRay* a;
  const EndRay* b;
};

// Axis vertex A(t): t >= 0 follows ray b below the meet, t <= 0 follows ray a.
inline Word axis_vertex(const AxisFrame& frame, long long t) {
  std::size_t depth = frame.meet + static_cast<std::size_t>(t >= 0 ? t : -t);
  return (t >= 0 ? *frame.b : *frame.a).prefix(depth);
}

struct AxisEdges {
  bool parentIsAxis;
  int axisChildA;  // letter toward A(t-1), -1 if that side is the parent
  int axisChildB;  // letter toward A(t+1), -1 if that side is the parent
};

inline AxisEdges axis_edges_at(const AxisFrame& frame, long long t) {
  AxisEdges e{false, -1, -1};
  std::size_t depth = frame.meet + static_cast<std::size_t>(t >= 0 ? t : -t);
  if (t > 0) {
    e.parentIsAxis = true;  // parent is A(t-1)
    e.axisChildB = frame.b->letter(depth);
  } else if (t < 0) {
    e.parentIsAxis = true;  // parent is A(t+1)
    e.axisChildA = frame.a->letter(depth);
  } else {
    e.axisChildA = frame.a->letter(frame.meet);
    e.axisChildB = frame.b->letter(frame.meet);
  }
  return e;
}

struct WalkMove {
  bool toParent;
  std::uint8_t letter;
};

// Rank of a move among the allowed moves at a vertex of given depth. Forbidden
// entries: parent and/or up to two child letters. Order: parent, then letters.
inline int move_rank(int degree, std::size_t depth, bool parentForbidden, int childForbidden1,
                     int childForbidden2, const WalkMove& move) {
  int rank = 0;
  bool parentExists = depth > 0;
  if (move.toParent) return 0;  // parent, when allowed, is always rank 0
  if (parentExists && !parentForbidden) rank += 1;
  int alphabet = (depth == 0) ? degree : degree - 1;
  for (int letter = 0; letter < alphabet; ++letter) {
    if (letter == childForbidden1 || letter == childForbidden2) continue;
    if (letter == move.letter) return rank;
    ++rank;
  }
  throw std::logic_error("walk move not found among allowed moves");
}

inline WalkMove move_of_rank(int degree, std::size_t depth, bool parentForbidden,
                             int childForbidden1, int childForbidden2, int rank) {
  bool parentExists = depth > 0;
  if (parentExists && !parentForbidden) {
    if (rank == 0) return WalkMove{true, 0};
    --rank;
  }
  int alphabet = (depth == 0) ? degree : degree - 1;
  for (int letter = 0; letter < alphabet; ++letter) {
    if (letter == childForbidden1 || letter == childForbidden2) continue;
    if (rank == 0) return WalkMove{false, static_cast<std::uint8_t>(letter)};
    --rank;
  }
  throw std::logic_error("walk rank out of range");
}

}  // namespace detail

// Image of a word under the axis translation by `steps` toward endB (negative
// steps move toward endA). The map is the tree automorphism determined by
// shifting the attachment point along the axis and replaying the off-axis
// walk rank-for-rank.
inline Word translate_along_axis(const TreeParams& params, const Word& w, const EndRay& endA,
                                 const EndRay& endB, long long steps) {
  validate(params);
  std::size_t meet = endA.divergence(endB);
  if (meet >= 4096)
    throw std::invalid_argument("axis ends are equal to the materialization guard depth");
  detail::AxisFrame frame{meet, &endA, &endB};

  std::size_t la = endA.lcp_with(w);
  std::size_t lb = endB.lcp_with(w);
  long long tAttach;
  std::vector<detail::WalkMove> walk;
  if (la > meet) {
    tAttach = -static_cast<long long>(la - meet);
    for (std::size_t p = la; p < w.size(); ++p) walk.push_back({false, w[p]});
  } else if (lb > meet) {
    tAttach = static_cast<long long>(lb - meet);
    for (std::size_t p = lb; p < w.size(); ++p) walk.push_back({false, w[p]});
  } else {
    // w hangs off the meet point through its ancestor chain: lcp with both
    // rays is the same stem depth c <= meet.
    std::size_t c = la;
    tAttach = 0;
    for (std::size_t up = 0; up < meet - c; ++up) walk.push_back({true, 0});
    for (std::size_t p = c; p < w.size(); ++p) walk.push_back({false, w[p]});
  }

  // Replay at the shifted attachment.
  long long tImage = tAttach + steps;
  Word at = detail::axis_vertex(frame, tImage);
  Word atSource = detail::axis_vertex(frame, tAttach);

  bool first = true;
  bool srcParentForbidden = false, imgParentForbidden = false;
  int srcChildF1 = -1, srcChildF2 = -1, imgChildF1 = -1, imgChildF2 = -1;
  {
    detail::AxisEdges src = detail::axis_edges_at(frame, tAttach);
    srcParentForbidden = src.parentIsAxis;
    srcChildF1 = src.axisChildA;
    srcChildF2 = src.axisChildB;
    detail::AxisEdges img = detail::axis_edges_at(frame, tImage);
    imgParentForbidden = img.parentIsAxis;
    imgChildF1 = img.axisChildA;
    imgChildF2 = img.axisChildB;
  }

  for (const detail::WalkMove& move : walk) {
    int rank = detail::move_rank(params.d, atSource.size(), srcParentForbidden, srcChildF1,
                                 srcChildF2, move);
    detail::WalkMove imageMove = detail::move_of_rank(params.d, at.size(), imgParentForbidden,
                                                      imgChildF1, imgChildF2, rank);
    // Advance the source frame.
    if (move.toParent) {
      std::uint8_t came = atSource.back();
      atSource.pop_back();
      srcParentForbidden = false;
      srcChildF1 = came;
      srcChildF2 = -1;
    } else {
      atSource.push_back(move.letter);
      srcParentForbidden = true;
      srcChildF1 = -1;
      srcChildF2 = -1;
    }
    // Advance the image frame.
    if (imageMove.toParent) {
      std::uint8_t came = at.back();
      at.pop_back();
      imgParentForbidden = false;
      imgChildF1 = came;
      imgChildF2 = -1;
    } else {
      at.push_back(imageMove.letter);
      imgParentForbidden = true;
      imgChildF1 = -1;
      imgChildF2 = -1;
    }
    first = false;
  }
  (void)first;
  return at;
}

// Evaluates (tau_n f)(v) and (tau_n g)(v) where tau_n shifts coordinate i by
// n toward g's end and coordinate j by -n (equivalently toward f's end by n)
// along the respective axes. Both functions are fixed by tau_n, which is what
// callers verify: the returned pair equals (f(v), g(v)).
inline std::pair<long long, long long> apply_balanced_shift(const TreeParams& params,
                                                            const DistanceLikeFunction& f,
                                                            const DistanceLikeFunction& g, int i,
                                                            int j, long long n, const Vertex& v) {
  validate(params);
  if (i < 0 || j < 0 || i >= params.k || j >= params.k || i == j)
    throw std::invalid_argument("balanced shift needs two distinct coordinates");
  if (static_cast<int>(f.dirs.size()) != params.k || static_cast<int>(g.dirs.size()) != params.k)
    throw std::invalid_argument("function arity does not match TreeParams.k");
  for (int c : {i, j}) {
    if (f.dirs[c].kind != Direction::Kind::End || g.dirs[c].kind != Direction::Kind::End)
      throw std::invalid_argument("balanced shift requires end directions in the shifted coordinates");
    if (f.dirs[c].ray.divergence(g.dirs[c].ray) >= 4096)
      throw std::invalid_argument("balanced shift requires distinct ends in the shifted coordinates");
  }
  if (!is_valid_vertex(params, v)) throw std::invalid_argument("vertex invalid for TreeParams");

  // tau_n^{-1} translates coordinate i by -n and coordinate j by +n along the
  // axes [f_i, g_i] and [f_j, g_j], positive direction toward g's end.
  Vertex pre = v;
  pre.coords[i] = translate_along_axis(params, v.coords[i], f.dirs[i].ray, g.dirs[i].ray, -n);
  pre.coords[j] = translate_along_axis(params, v.coords[j], f.dirs[j].ray, g.dirs[j].ray, n);
  return {horo_eval(params, f, pre), horo_eval(params, g, pre)};
}

}  // namespace ipvt_perc
