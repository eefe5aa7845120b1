#pragma once

namespace varorder {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace varorder
