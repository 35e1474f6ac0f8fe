// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>

namespace ffconv::he {

// Tallies of homomorphic operations. All fields are additive.
struct OpCounters {
    std::uint64_t mul_pc = 0;           // plaintext-ciphertext multiplies
    std::uint64_t add_cc = 0;           // ciphertext-ciphertext additions
    std::uint64_t rot = 0;              // rotations by a nonzero amount
    std::uint64_t mul_cc = 0;           // ciphertext squarings
    std::uint64_t assembly_mul_pc = 0;  // one-hot masks that only place results
    std::uint64_t add_pc = 0;           // plaintext additions (biases)
    std::uint64_t rot_elided = 0;       // rotations by zero: requested, not charged

    // Rotations a schedule asked for, including the elided identity ones.
    std::uint64_t nominal_rot() const { return rot + rot_elided; }

    OpCounters& operator+=(const OpCounters& other);
    friend OpCounters operator+(OpCounters a, const OpCounters& b) { return a += b; }
    friend OpCounters operator-(const OpCounters& a, const OpCounters& b);
    bool operator==(const OpCounters&) const = default;
};

std::ostream& operator<<(std::ostream& os, const OpCounters& c);

}  // namespace ffconv::he
