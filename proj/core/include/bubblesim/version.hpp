#pragma once

namespace bubblesim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bubblesim
