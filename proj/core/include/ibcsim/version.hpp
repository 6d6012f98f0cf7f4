#pragma once

namespace ibcsim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ibcsim
