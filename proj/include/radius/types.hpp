#pragma once

#include <cstdint>

namespace radius {

using LinkId = std::uint32_t;

enum class LinkState : std::uint8_t { good, weak };

inline const char* to_string(LinkState s) noexcept { return s == LinkState::good ? "good" : "weak"; }

}  // namespace radius
