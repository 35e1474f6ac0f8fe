// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ffconv/common/int128.h"
#include "ffconv/he/scheme_params.h"

namespace ffconv::he {

class Evaluator;

// A simulated packed ciphertext: N residues mod t plus two depth ledgers.
// `depth` counts weight multiplications and squarings on the longest path;
// `assembly_depth` counts the one-hot masks used to move or place slots.
//
// Ciphertexts produced by a count-only evaluator carry no slot values.
class SlotCiphertext {
public:
    std::size_t slot_count() const { return slot_count_; }
    u128 modulus() const { return modulus_; }
    bool has_values() const { return !slots_.empty(); }
    std::span<const u128> slots() const { return slots_; }
    int depth() const { return depth_; }
    int assembly_depth() const { return assembly_depth_; }

private:
    friend class Evaluator;

    std::vector<u128> slots_;
    std::size_t slot_count_ = 0;
    u128 modulus_ = 0;
    int depth_ = 0;
    int assembly_depth_ = 0;
};

// Plaintext operand of mul_plain / add_plain. A constant vector is stored
// as a single residue.
class PlainVector {
public:
    // Signed values mapped to residues; missing tail slots are zero.
    static PlainVector encode(std::span<const i128> values, const SchemeParams& params);
    static PlainVector constant(i128 value, const SchemeParams& params);
    // Ones on [begin, end), zeros elsewhere.
    static PlainVector indicator(std::size_t begin, std::size_t end, const SchemeParams& params);
    // Residues must already lie in [0, t).
    static PlainVector from_residues(std::vector<u128> residues, const SchemeParams& params);

    std::size_t size() const { return size_; }
    bool is_constant() const { return values_.size() == 1 && size_ != 1; }
    u128 operator[](std::size_t i) const { return values_.size() == 1 ? values_[0] : values_[i]; }

private:
    std::vector<u128> values_;
    std::size_t size_ = 0;
};

// Residue of a signed value that already satisfies |value| < t/2.
u128 to_residue(i128 value, u128 modulus);
// Centered representative in [-t/2, t/2).
i128 centered(u128 residue, u128 modulus);

}  // namespace ffconv::he
