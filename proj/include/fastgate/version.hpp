#pragma once

namespace fastgate {

inline constexpr const char *version = "0.1.0";

}  // namespace fastgate
