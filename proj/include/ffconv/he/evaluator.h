// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ffconv/common/int128.h"
#include "ffconv/he/op_counters.h"
#include "ffconv/he/scheme_params.h"
#include "ffconv/he/slot_ciphertext.h"

namespace ffconv::he {

enum class EvalMode {
    kValues,     // full slot arithmetic
    kCountOnly,  // same schedule, no slot data; for counting at full N
};

// Which ledger a mask multiplication is charged to. Both raise the
// ciphertext's assembly depth rather than its weight depth.
enum class MaskUse {
    kTransition,  // slot regrouping between layers; counted as mul_pc
    kAssembly,    // placing dot-product results; counted as assembly_mul_pc
};

// Evaluation context. Ciphertexts are immutable values; every operation
// returns a new ciphertext and charges this context's counters.
//
// Not thread-safe: use one Evaluator per thread and merge counters.
class Evaluator {
public:
    explicit Evaluator(SchemeParams params, EvalMode mode = EvalMode::kValues);

    const SchemeParams& params() const { return params_; }
    EvalMode mode() const { return mode_; }
    bool tracks_values() const { return mode_ == EvalMode::kValues; }

    const OpCounters& counters() const { return counters_; }
    void reset_counters() { counters_ = {}; }

    // Slot i holds values[i] mod t; remaining slots are zero.
    // Throws CapacityError when values.size() > N and OverflowError when
    // some |value| >= t/2.
    SlotCiphertext encrypt(std::span<const i128> values) const;
    SlotCiphertext zero() const;
    // Centered lift of every slot. Throws std::logic_error in count-only mode.
    std::vector<i128> decrypt(const SlotCiphertext& ct) const;

    // Cyclic left rotation: out[i] = in[(i + k) mod N], 0 <= k < N.
    // k == 0 is free and only bumps rot_elided.
    SlotCiphertext rotate(const SlotCiphertext& ct, std::size_t k);
    // Rotation by any signed amount, reduced mod N.
    SlotCiphertext rotate_by(const SlotCiphertext& ct, std::int64_t shift);

    SlotCiphertext mul_plain(const SlotCiphertext& ct, const PlainVector& pv);
    SlotCiphertext mul_mask(const SlotCiphertext& ct, const PlainVector& mask, MaskUse use);
    SlotCiphertext add_plain(const SlotCiphertext& ct, const PlainVector& pv);
    SlotCiphertext add_cc(const SlotCiphertext& a, const SlotCiphertext& b);
    SlotCiphertext square(const SlotCiphertext& ct);

    // Sum of the first m slots into slot 0 using ceil(log2 m) rotations and
    // additions. Every slot at index >= m must be zero.
    SlotCiphertext rotate_and_sum(const SlotCiphertext& ct, std::size_t m);
    // Binary-tree rotate-add over a window of 2^log2_span slots without a
    // precondition: afterwards slot j holds sum_{i < 2^log2_span} in[j + i].
    SlotCiphertext rotate_and_sum_span(const SlotCiphertext& ct, int log2_span);

private:
    void check_operand(const SlotCiphertext& ct) const;
    void check_plain(const PlainVector& pv) const;
    SlotCiphertext like(const SlotCiphertext& ct) const;

    SchemeParams params_;
    EvalMode mode_;
    OpCounters counters_;
};

}  // namespace ffconv::he
