#pragma once

namespace mdurn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mdurn
