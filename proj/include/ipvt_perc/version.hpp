#pragma once

namespace ipvt_perc {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ipvt_perc
