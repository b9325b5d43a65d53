#pragma once

namespace dynkin {
inline constexpr const char* kVersion = "0.1.0";
}
