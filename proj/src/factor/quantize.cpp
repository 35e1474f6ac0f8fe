// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ffconv/factor/factor.h"

namespace ffconv::factor {

engine::WeightMatrix quantize(const RealMatrix& m, int bits) {
    if (bits < 2 || bits > 31) {
        throw std::invalid_argument("quantization needs 2 <= bits <= 31");
    }
    double peak = 0.0;
    for (double x : m.data()) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument("cannot quantize a non-finite entry");
        }
        peak = std::max(peak, std::abs(x));
    }
    const double levels = std::ldexp(1.0, bits - 1) - 1.0;
    const double scale = peak > 0.0 ? peak / levels : 1.0;
    engine::WeightMatrix q{IntMatrix(m.rows(), m.cols()), bits, scale};
    for (std::size_t i = 0; i < m.data().size(); ++i) {
        // std::round breaks ties away from zero.
        double v = std::round(m.data()[i] / scale);
        v = std::min(levels, std::max(-levels, v));
        q.entries.data()[i] = static_cast<i128>(v);
    }
    return q;
}

RealMatrix dequantize(const engine::WeightMatrix& q) {
    RealMatrix m(q.entries.rows(), q.entries.cols());
    for (std::size_t i = 0; i < m.data().size(); ++i) {
        m.data()[i] = static_cast<double>(q.entries.data()[i]) * q.scale;
    }
    return m;
}

engine::QuantizedPair quantize_factors(const FactorizedPair& pair, int bits) {
    return {quantize(pair.w1, bits), quantize(pair.w2, bits)};
}

}  // namespace ffconv::factor
