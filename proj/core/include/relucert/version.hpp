#pragma once

namespace relucert {

inline constexpr const char* kVersion = "0.1.0";

} // namespace relucert
