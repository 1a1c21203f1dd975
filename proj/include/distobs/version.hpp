#pragma once

namespace distobs {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace distobs
