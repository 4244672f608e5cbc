#pragma once

namespace hystlat {

inline constexpr const char* kToolName = "hystlat";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace hystlat
