#pragma once

namespace evaq {

inline constexpr const char* kVersion = "0.1.0";

} // namespace evaq
