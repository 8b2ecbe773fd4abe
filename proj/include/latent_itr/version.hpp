#pragma once

namespace litr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace litr
