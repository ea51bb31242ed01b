#pragma once

namespace mq {
inline constexpr const char* kVersion = "0.1.0";
}  // namespace mq
