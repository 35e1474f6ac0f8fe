// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffconv/he/evaluator.h"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "ffconv/common/error.h"
#include "modular.h"

namespace ffconv::he {

namespace {

void check_signed_range(i128 value, u128 t) {
    if (2 * abs128(value) >= t) {
        throw OverflowError("value " + to_string(value) + " does not fit the centered range of t=" + to_string(t));
    }
}

}  // namespace

u128 to_residue(i128 value, u128 modulus) {
    check_signed_range(value, modulus);
    return value < 0 ? modulus - abs128(value) : static_cast<u128>(value);
}

i128 centered(u128 residue, u128 modulus) { return detail::center(residue, modulus); }

PlainVector PlainVector::encode(std::span<const i128> values, const SchemeParams& params) {
    if (values.size() > params.slot_count) {
        throw CapacityError("plaintext of " + std::to_string(values.size()) + " values exceeds N=" +
                            std::to_string(params.slot_count));
    }
    PlainVector pv;
    pv.size_ = params.slot_count;
    pv.values_.assign(params.slot_count, 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        pv.values_[i] = to_residue(values[i], params.plain_modulus);
    }
    return pv;
}

PlainVector PlainVector::constant(i128 value, const SchemeParams& params) {
    PlainVector pv;
    pv.size_ = params.slot_count;
    pv.values_.assign(1, to_residue(value, params.plain_modulus));
    return pv;
}

PlainVector PlainVector::indicator(std::size_t begin, std::size_t end, const SchemeParams& params) {
    if (begin > end || end > params.slot_count) {
        throw std::out_of_range("indicator range out of bounds");
    }
    PlainVector pv;
    pv.size_ = params.slot_count;
    pv.values_.assign(params.slot_count, 0);
    std::fill(pv.values_.begin() + static_cast<std::ptrdiff_t>(begin),
              pv.values_.begin() + static_cast<std::ptrdiff_t>(end), u128{1});
    return pv;
}

PlainVector PlainVector::from_residues(std::vector<u128> residues, const SchemeParams& params) {
    if (residues.size() != params.slot_count) {
        throw std::invalid_argument("plaintext length must equal N");
    }
    for (u128 r : residues) {
        if (r >= params.plain_modulus) {
            throw std::invalid_argument("plaintext residue outside [0, t)");
        }
    }
    PlainVector pv;
    pv.size_ = params.slot_count;
    pv.values_ = std::move(residues);
    return pv;
}

Evaluator::Evaluator(SchemeParams params, EvalMode mode) : params_(params), mode_(mode) { params_.validate(); }

SlotCiphertext Evaluator::zero() const {
    SlotCiphertext ct;
    ct.slot_count_ = params_.slot_count;
    ct.modulus_ = params_.plain_modulus;
    if (tracks_values()) {
        ct.slots_.assign(params_.slot_count, 0);
    }
    return ct;
}

SlotCiphertext Evaluator::encrypt(std::span<const i128> values) const {
    if (values.size() > params_.slot_count) {
        throw CapacityError("cannot encrypt " + std::to_string(values.size()) + " values into N=" +
                            std::to_string(params_.slot_count) + " slots");
    }
    SlotCiphertext ct = zero();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const u128 r = to_residue(values[i], params_.plain_modulus);
        if (tracks_values()) {
            ct.slots_[i] = r;
        }
    }
    return ct;
}

std::vector<i128> Evaluator::decrypt(const SlotCiphertext& ct) const {
    check_operand(ct);
    if (!ct.has_values()) {
        throw std::logic_error("cannot decrypt a count-only ciphertext");
    }
    std::vector<i128> out(ct.slot_count_);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = detail::center(ct.slots_[i], ct.modulus_);
    }
    return out;
}

void Evaluator::check_operand(const SlotCiphertext& ct) const {
    if (ct.slot_count_ != params_.slot_count || ct.modulus_ != params_.plain_modulus) {
        throw std::invalid_argument("ciphertext parameters do not match the evaluator");
    }
    if (tracks_values() != ct.has_values()) {
        throw std::invalid_argument("ciphertext evaluation mode does not match the evaluator");
    }
}

void Evaluator::check_plain(const PlainVector& pv) const {
    if (pv.size() != params_.slot_count) {
        throw std::invalid_argument("plaintext length does not match N");
    }
}

SlotCiphertext Evaluator::like(const SlotCiphertext& ct) const {
    SlotCiphertext out;
    out.slot_count_ = ct.slot_count_;
    out.modulus_ = ct.modulus_;
    out.depth_ = ct.depth_;
    out.assembly_depth_ = ct.assembly_depth_;
    if (ct.has_values()) {
        out.slots_.resize(ct.slot_count_);
    }
    return out;
}

SlotCiphertext Evaluator::rotate(const SlotCiphertext& ct, std::size_t k) {
    check_operand(ct);
    if (k >= params_.slot_count) {
        throw std::out_of_range("rotation amount " + std::to_string(k) + " outside [0, N)");
    }
    if (k == 0) {
        ++counters_.rot_elided;
        return ct;
    }
    ++counters_.rot;
    SlotCiphertext out = like(ct);
    if (ct.has_values()) {
        std::rotate_copy(ct.slots_.begin(), ct.slots_.begin() + static_cast<std::ptrdiff_t>(k), ct.slots_.end(),
                         out.slots_.begin());
    }
    return out;
}

SlotCiphertext Evaluator::rotate_by(const SlotCiphertext& ct, std::int64_t shift) {
    const auto n = static_cast<std::int64_t>(params_.slot_count);
    const std::int64_t k = ((shift % n) + n) % n;
    return rotate(ct, static_cast<std::size_t>(k));
}

SlotCiphertext Evaluator::mul_plain(const SlotCiphertext& ct, const PlainVector& pv) {
    check_operand(ct);
    check_plain(pv);
    ++counters_.mul_pc;
    SlotCiphertext out = like(ct);
    ++out.depth_;
    if (ct.has_values()) {
        const u128 t = ct.modulus_;
        for (std::size_t i = 0; i < ct.slot_count_; ++i) {
            out.slots_[i] = detail::mul_mod(ct.slots_[i], pv[i], t);
        }
    }
    return out;
}

SlotCiphertext Evaluator::mul_mask(const SlotCiphertext& ct, const PlainVector& mask, MaskUse use) {
    check_operand(ct);
    check_plain(mask);
    if (use == MaskUse::kTransition) {
        ++counters_.mul_pc;
    } else {
        ++counters_.assembly_mul_pc;
    }
    SlotCiphertext out = like(ct);
    ++out.assembly_depth_;
    if (ct.has_values()) {
        const u128 t = ct.modulus_;
        for (std::size_t i = 0; i < ct.slot_count_; ++i) {
            out.slots_[i] = detail::mul_mod(ct.slots_[i], mask[i], t);
        }
    }
    return out;
}

SlotCiphertext Evaluator::add_plain(const SlotCiphertext& ct, const PlainVector& pv) {
    check_operand(ct);
    check_plain(pv);
    ++counters_.add_pc;
    SlotCiphertext out = like(ct);
    if (ct.has_values()) {
        const u128 t = ct.modulus_;
        for (std::size_t i = 0; i < ct.slot_count_; ++i) {
            out.slots_[i] = detail::add_mod(ct.slots_[i], pv[i], t);
        }
    }
    return out;
}

SlotCiphertext Evaluator::add_cc(const SlotCiphertext& a, const SlotCiphertext& b) {
    check_operand(a);
    check_operand(b);
    ++counters_.add_cc;
    SlotCiphertext out = like(a);
    out.depth_ = std::max(a.depth_, b.depth_);
    out.assembly_depth_ = std::max(a.assembly_depth_, b.assembly_depth_);
    if (a.has_values()) {
        const u128 t = a.modulus_;
        for (std::size_t i = 0; i < a.slot_count_; ++i) {
            out.slots_[i] = detail::add_mod(a.slots_[i], b.slots_[i], t);
        }
    }
    return out;
}

SlotCiphertext Evaluator::square(const SlotCiphertext& ct) {
    check_operand(ct);
    ++counters_.mul_cc;
    SlotCiphertext out = like(ct);
    ++out.depth_;
    if (ct.has_values()) {
        const u128 t = ct.modulus_;
        for (std::size_t i = 0; i < ct.slot_count_; ++i) {
            out.slots_[i] = detail::mul_mod(ct.slots_[i], ct.slots_[i], t);
        }
    }
    return out;
}

SlotCiphertext Evaluator::rotate_and_sum_span(const SlotCiphertext& ct, int log2_span) {
    check_operand(ct);
    if (log2_span < 0 || (std::size_t{1} << log2_span) > params_.slot_count) {
        throw std::out_of_range("rotate-and-sum span exceeds N");
    }
    SlotCiphertext acc = ct;
    for (int level = 0; level < log2_span; ++level) {
        acc = add_cc(acc, rotate(acc, std::size_t{1} << level));
    }
    return acc;
}

SlotCiphertext Evaluator::rotate_and_sum(const SlotCiphertext& ct, std::size_t m) {
    check_operand(ct);
    if (m < 1 || m > params_.slot_count) {
        throw std::out_of_range("rotate-and-sum length " + std::to_string(m) + " outside [1, N]");
    }
    if (ct.has_values()) {
        for (std::size_t i = m; i < ct.slot_count_; ++i) {
            if (ct.slots_[i] != 0) {
                throw PreconditionError("rotate_and_sum: slot " + std::to_string(i) + " beyond length " +
                                        std::to_string(m) + " is nonzero");
            }
        }
    }
    return rotate_and_sum_span(ct, ceil_log2(m));
}

}  // namespace ffconv::he
