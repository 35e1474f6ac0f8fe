// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffconv/he/scheme_params.h"

#include <sstream>
#include <stdexcept>

#include "ffconv/he/op_counters.h"

namespace ffconv::he {

void SchemeParams::validate() const {
    if (slot_count < 2 || (slot_count & (slot_count - 1)) != 0) {
        throw std::invalid_argument("slot count N must be a power of two >= 2, got " + std::to_string(slot_count));
    }
    if (plain_modulus < 2) {
        throw std::invalid_argument("plaintext modulus t must be >= 2");
    }
    if (plain_modulus > kMaxPlainModulus) {
        throw std::invalid_argument("plaintext modulus t exceeds the supported 2^110");
    }
    if (!(rotation_weight > 0.0)) {
        throw std::invalid_argument("rotation weight must be positive");
    }
    if (depth_limit < 0 || coeff_modulus_bits < 0) {
        throw std::invalid_argument("depth limit and coefficient modulus bits must be nonnegative");
    }
}

std::string SchemeParams::describe() const {
    std::ostringstream os;
    os << "N=" << slot_count << " t=" << to_string(plain_modulus) << " rotation_weight=" << rotation_weight;
    if (coeff_modulus_bits > 0) {
        os << " logQ=" << coeff_modulus_bits;
    }
    if (depth_limit > 0) {
        os << " depth_limit=" << depth_limit;
    }
    return os.str();
}

OpCounters& OpCounters::operator+=(const OpCounters& o) {
    mul_pc += o.mul_pc;
    add_cc += o.add_cc;
    rot += o.rot;
    mul_cc += o.mul_cc;
    assembly_mul_pc += o.assembly_mul_pc;
    add_pc += o.add_pc;
    rot_elided += o.rot_elided;
    return *this;
}

OpCounters operator-(const OpCounters& a, const OpCounters& b) {
    OpCounters d;
    d.mul_pc = a.mul_pc - b.mul_pc;
    d.add_cc = a.add_cc - b.add_cc;
    d.rot = a.rot - b.rot;
    d.mul_cc = a.mul_cc - b.mul_cc;
    d.assembly_mul_pc = a.assembly_mul_pc - b.assembly_mul_pc;
    d.add_pc = a.add_pc - b.add_pc;
    d.rot_elided = a.rot_elided - b.rot_elided;
    return d;
}

std::ostream& operator<<(std::ostream& os, const OpCounters& c) {
    return os << "{mul_pc=" << c.mul_pc << " add_cc=" << c.add_cc << " rot=" << c.rot << " mul_cc=" << c.mul_cc
              << " assembly_mul_pc=" << c.assembly_mul_pc << " add_pc=" << c.add_pc << " rot_elided=" << c.rot_elided
              << "}";
}

}  // namespace ffconv::he
