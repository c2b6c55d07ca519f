#pragma once

namespace ccc {

// Version tag embedded in every report and checkpoint-producing run so a
// result file can always be traced back to the code that wrote it.
inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kVersionTag = "ccc-engine 0.1.0";

}  // namespace ccc
