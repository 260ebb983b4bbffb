#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ipvt_perc {

using uint128 = unsigned __int128;

// Exact counting arithmetic. Ball/sphere sizes grow like (d-1)^(q k); callers
// get an exception instead of a silently wrapped value.
inline uint128 checked_add(uint128 a, uint128 b) {
  uint128 r = a + b;
  if (r < a) throw std::overflow_error("128-bit overflow in exact count addition");
  return r;
}

inline uint128 checked_mul(uint128 a, uint128 b) {
  if (a == 0 || b == 0) return 0;
  uint128 r = a * b;
  if (r / a != b) throw std::overflow_error("128-bit overflow in exact count multiplication");
  return r;
}

inline std::string to_string(uint128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.push_back(static_cast<char>('0' + static_cast<unsigned>(v % 10)));
    v /= 10;
  }
  return {s.rbegin(), s.rend()};
}

}  // namespace ipvt_perc
