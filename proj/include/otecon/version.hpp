#pragma once

namespace otecon {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace otecon
