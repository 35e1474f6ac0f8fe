// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>

#include "ffconv/common/int128.h"

namespace ffconv::he {

// Largest plaintext modulus the slot arithmetic supports. Products of two
// 53-bit primes (about 2^106) fit.
inline constexpr u128 kMaxPlainModulus = static_cast<u128>(1) << 110;

// Parameters of the simulated batched scheme. Only N and t affect
// arithmetic; the remaining fields are carried for reporting.
struct SchemeParams {
    std::size_t slot_count = 0;  // N, a power of two
    u128 plain_modulus = 0;      // t
    double rotation_weight = 10.0;

    int coeff_modulus_bits = 0;  // log2 Q, 0 when unspecified
    int security_bits = 128;
    int depth_limit = 0;  // 0 means no declared limit

    // Throws std::invalid_argument when an invariant is violated.
    void validate() const;

    std::string describe() const;
};

}  // namespace ffconv::he
