#pragma once
// Kosovo war civilian casualty data: four lists (ABA, EXH, HRW, OSCE),
// n = 4400 observed, unobserved cell absent.

#include <cstdint>
#include <string_view>

#include "mse/table.hpp"

namespace mse {

// Canonical CSV text of the fixture (cells in code order).
std::string_view kosovo_csv() noexcept;

// FNV-1a 64 of kosovo_csv(); pinned so the fixture cannot drift silently.
inline constexpr std::uint64_t kKosovoChecksum = 0xfa7e5175e33e99f1ULL;

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

ObservedTable kosovo_table();

}  // namespace mse
