#pragma once

namespace episim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace episim
