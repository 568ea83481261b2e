#pragma once

namespace prl {

inline constexpr const char* version = "0.1.0";

}  // namespace prl
