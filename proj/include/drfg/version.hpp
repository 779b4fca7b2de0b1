#pragma once

namespace drfg {

inline constexpr const char* kVersion = "0.1.0";

} // namespace drfg
