#pragma once

namespace mifs {

inline constexpr const char* kVersion = "1.0.0";

} // namespace mifs
