#pragma once

namespace ffdr {

inline constexpr const char* kVersion = "0.1.0";

} // namespace ffdr
