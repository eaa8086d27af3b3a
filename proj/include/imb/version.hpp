#pragma once

namespace imb {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kProgramName = "imb-lab";

}  // namespace imb
