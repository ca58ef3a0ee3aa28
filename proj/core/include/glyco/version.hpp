#pragma once

namespace glyco {

inline constexpr const char* kToolkitName = "glycopredict";
inline constexpr const char* kToolkitVersion = "0.1.0";

} // namespace glyco
