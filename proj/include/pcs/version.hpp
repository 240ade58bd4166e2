#pragma once

namespace pcs {

inline constexpr const char* version = "0.1.0";

}  // namespace pcs
