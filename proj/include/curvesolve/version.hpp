#pragma once

namespace curvesolve {

inline constexpr const char* kVersion = "curvesolve 1.0.0";

} // namespace curvesolve
