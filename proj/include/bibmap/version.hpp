#pragma once

namespace bibmap {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace bibmap
