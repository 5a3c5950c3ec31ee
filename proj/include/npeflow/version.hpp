#pragma once

namespace npeflow {

// Version tag recorded in run manifests and checkpoint headers. Bump on any
// change that can alter emitted numbers.
inline constexpr const char* kVersionTag = "npeflow-1.0.0";

}  // namespace npeflow
