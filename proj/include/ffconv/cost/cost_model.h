// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

// Closed-form operation counts for layers, transitions and whole packing
// variants. These are the published formulas; engine_counts.h predicts the
// engine's own schedule stage by stage.

#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "ffconv/engine/engine.h"
#include "ffconv/he/op_counters.h"
#include "ffconv/tensor/tensor.h"

namespace ffconv::cost {

inline constexpr double kDefaultRotationWeight = 10.0;

struct CostTriple {
    std::uint64_t mul_pc = 0;
    std::uint64_t add_cc = 0;
    std::uint64_t rot = 0;

    double weighted(double rotation_weight = kDefaultRotationWeight) const {
        return static_cast<double>(mul_pc) + static_cast<double>(add_cc) + rotation_weight * static_cast<double>(rot);
    }
    CostTriple& operator+=(const CostTriple& o) {
        mul_pc += o.mul_pc;
        add_cc += o.add_cc;
        rot += o.rot;
        return *this;
    }
    friend CostTriple operator+(CostTriple a, const CostTriple& b) { return a += b; }
    bool operator==(const CostTriple&) const = default;

    // Plaintext multiplies (transition masks included, assembly masks not),
    // ciphertext additions and charged rotations.
    static CostTriple of(const he::OpCounters& c) { return {c.mul_pc, c.add_cc, c.rot}; }
};

// DensePack convolution: O = O_w * O_h * O_c dot products, each a multiply
// and a rotate-and-sum of r = ceil(log2 m) steps. m defaults to the
// occupied input length; the result is (O, O r, O r).
CostTriple predict_dense(const TensorShape& in, const KernelSpec& kernel, std::size_t slot_count,
                         std::optional<std::size_t> span = std::nullopt);

// ConvPack convolution: (O_c K, O_c (K - 1), 0).
CostTriple predict_conv(std::size_t out_channels, std::size_t k);

// Layout change between the two stages of a pattern. `first_out` is the
// first stage's output O^1 and `second` the kernel the second stage
// applies to it. DP-DP has no transition and throws std::invalid_argument.
//   CP-HI2C-CP, DP-HI2C-CP, d > 1: (|O^1|, S K, S K), S = O^2_w O^2_h
//   CP-HI2C-CP, d = 1:            (0, 0, 0)
//   DP-HI2C-CP, d = 1:            (O^1_c, 0, O^1_c)
//   CP-HI2C-DP:                   (0, I^2_c - 1, I^2_c - 1)
CostTriple predict_transition(engine::Pattern pattern, const TensorShape& first_out, const KernelSpec& second);

// Low-rank layer on Im2Col columns: W1 (r outputs) then W2 (O_c outputs),
// both ConvPack. mul r (K + O_c), add r (K + O_c) - r - O_c.
CostTriple predict_factorized_conv(std::size_t k, std::size_t out_channels, std::size_t rank);
// The published addition entry for the same layer, r (K + O_c) - K - r.
std::uint64_t published_factorized_add(std::size_t k, std::size_t out_channels, std::size_t rank);

// Falcon rows of the published complexity tables, kept as text because
// their depth-3 and p-dependent semantics are not modelled.
struct DocumentedRow {
    std::string_view scheme;
    std::string_view layer;
    std::string_view mul_pc;
    std::string_view add_cc;
    std::string_view rot;
};
const std::vector<DocumentedRow>& documented_rows();

// Where the tensor entering a factorized layer lives.
enum class Upstream { kPlain, kDense, kChannel };

struct PatternCost {
    engine::Pattern pattern;
    CostTriple upstream;    // bringing the input into the first stage's layout
    CostTriple first;       // W1
    CostTriple transition;  // between W1 and W2
    CostTriple second;      // W2
    CostTriple total;
    double weighted = 0;
};

// All four patterns for one factorized layer, ascending by weighted cost
// (ties keep the DP-HI2C-CP, DP-DP, CP-HI2C-CP, CP-HI2C-DP order).
std::vector<PatternCost> compare_patterns(const TensorShape& in, const KernelSpec& kernel, std::size_t rank,
                                          std::size_t slot_count, Upstream upstream,
                                          double rotation_weight = kDefaultRotationWeight);

// Rotation count of the dense baseline for WideNet's second conv, whose
// dot products span 6 x 6 x 192 = 6912 slots in the published model.
inline constexpr std::size_t kWideNetBaselineSpan = 6912;

}  // namespace ffconv::cost
