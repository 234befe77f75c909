#pragma once

namespace ekp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ekp
