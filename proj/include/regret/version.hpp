#pragma once

namespace regret {
inline constexpr const char* kVersion = "0.1.0";
}
