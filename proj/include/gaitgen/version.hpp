#pragma once

namespace gaitgen {

inline constexpr const char* kToolVersion = "gaitgen 1.0.0";

}  // namespace gaitgen
