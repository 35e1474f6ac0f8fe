// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "ffconv/common/int128.h"

namespace ffconv::he::detail {

// All helpers assume operands in [0, t) and t <= kMaxPlainModulus.

inline u128 add_mod(u128 a, u128 b, u128 t) {
    const u128 s = a + b;
    return s >= t ? s - t : s;
}

inline i128 center(u128 a, u128 t) { return 2 * a >= t ? static_cast<i128>(a) - static_cast<i128>(t) : static_cast<i128>(a); }

inline u128 mul_mod(u128 a, u128 b, u128 t) {
    constexpr u128 k64 = static_cast<u128>(1) << 64;
    if (t <= k64) {
        const auto p = static_cast<u128>(static_cast<std::uint64_t>(a)) * static_cast<std::uint64_t>(b);
        return p % t;
    }
    // Small centered operands: the signed product fits in 127 bits.
    constexpr i128 k63 = static_cast<i128>(1) << 63;
    const i128 ca = center(a, t);
    const i128 cb = center(b, t);
    if (ca > -k63 && ca < k63 && cb > -k63 && cb < k63) {
        i128 r = (ca * cb) % static_cast<i128>(t);
        if (r < 0) {
            r += static_cast<i128>(t);
        }
        return static_cast<u128>(r);
    }
    // Horner over 16-bit chunks of b; each step stays below 2^127 for t < 2^111.
    u128 r = 0;
    for (int shift = 112; shift >= 0; shift -= 16) {
        const u128 chunk = (b >> shift) & 0xFFFF;
        r = ((r << 16) + a * chunk) % t;
    }
    return r;
}

}  // namespace ffconv::he::detail
