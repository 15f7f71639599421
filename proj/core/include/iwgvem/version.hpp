#pragma once

namespace iwgvem {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace iwgvem
