// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ffconv {

using i128 = __int128;
using u128 = unsigned __int128;

// Decimal formatting; std::to_string has no 128-bit overloads.
std::string to_string(u128 value);
std::string to_string(i128 value);

// Parses an unsigned decimal string. Throws std::invalid_argument on bad
// digits and std::overflow_error when the value does not fit in 128 bits.
u128 parse_u128(std::string_view text);
i128 parse_i128(std::string_view text);

// Product of decimal factors, e.g. {"34359771137", "34360754177"}.
u128 parse_u128_product(const std::vector<std::string>& factors);

inline u128 abs128(i128 v) { return v < 0 ? static_cast<u128>(-(v + 1)) + 1 : static_cast<u128>(v); }

// Saturating arithmetic used by the magnitude ledger.
u128 sat_add(u128 a, u128 b);
u128 sat_mul(u128 a, u128 b);

constexpr u128 kU128Max = ~static_cast<u128>(0);

// ceil(log2(m)) for m >= 1.
int ceil_log2(std::uint64_t m);

}  // namespace ffconv
