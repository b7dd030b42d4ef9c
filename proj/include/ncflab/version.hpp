#pragma once

namespace ncflab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ncflab
