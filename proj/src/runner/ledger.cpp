// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffconv/runner/ledger.h"

#include <algorithm>
#include <sstream>

#include "ffconv/common/error.h"

namespace ffconv::runner {

namespace {

constexpr u128 kSaturated = static_cast<u128>(1) << 127;

u128 sat_mul(u128 a, u128 b) {
    if (a == 0 || b == 0) {
        return 0;
    }
    if (a > kSaturated / b) {
        return kSaturated;
    }
    return std::min(a * b, kSaturated);
}

u128 sat_add(u128 a, u128 b) { return std::min(kSaturated, a + b < a ? kSaturated : a + b); }

u128 abs_bias(const engine::BiasVector& b) {
    const i128 m = b.max_abs();
    return static_cast<u128>(m < 0 ? -m : m);
}

}  // namespace

std::optional<std::size_t> ScaleLedger::first_violation() const {
    for (const LayerBound& l : layers) {
        if (!l.fits) {
            return l.layer;
        }
    }
    return std::nullopt;
}

void ScaleLedger::require_fits() const {
    for (const LayerBound& l : layers) {
        if (!l.fits) {
            throw ModulusTooSmallError(l.layer, "layer " + std::to_string(l.layer) + " (" + l.name +
                                                    "): worst-case magnitude " + to_string(l.bound) +
                                                    " reaches t/2 for t = " + to_string(plain_modulus));
        }
    }
}

std::string ScaleLedger::describe() const {
    std::ostringstream os;
    os << "input bound " << to_string(input_bound) << ", t = " << to_string(plain_modulus) << "\n";
    for (const LayerBound& l : layers) {
        os << "  " << l.name << ": |x| <= " << to_string(l.bound) << ", scale " << l.scale
           << (l.fits ? "" : "  EXCEEDS t/2") << "\n";
    }
    return os.str();
}

ScaleLedger build_ledger(const NetworkSpec& net, const NetworkWeights& weights, u128 input_bound,
                         double input_scale) {
    check_weights(net, weights);
    ScaleLedger ledger;
    ledger.plain_modulus = net.scheme.plain_modulus;
    ledger.input_bound = input_bound;
    ledger.input_scale = input_scale;
    u128 b = input_bound;
    double scale = input_scale;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        const LayerWeights& lw = weights.layers[i];
        u128 peak = 0;
        switch (l.kind) {
            case LayerKind::kConv:
            case LayerKind::kFc:
                b = sat_add(sat_mul(lw.w.max_column_l1(), b), abs_bias(lw.bias));
                peak = b;
                scale *= lw.w.scale;
                break;
            case LayerKind::kFfconv: {
                const u128 mid = sat_mul(lw.pair.w1.max_column_l1(), b);
                b = sat_add(sat_mul(lw.pair.w2.max_column_l1(), mid), abs_bias(lw.bias));
                peak = std::max(mid, b);
                scale *= lw.pair.w1.scale * lw.pair.w2.scale;
                break;
            }
            case LayerKind::kSquare:
                b = sat_mul(b, b);
                peak = b;
                scale *= scale;
                break;
            case LayerKind::kAvgPool:
                b = sat_mul(static_cast<u128>(l.d) * l.d, b);
                peak = b;
                scale /= static_cast<double>(l.d * l.d);
                break;
        }
        const bool fits = peak < kSaturated && sat_mul(2, peak) < ledger.plain_modulus;
        ledger.layers.push_back({i, l.name, peak, scale, fits});
    }
    return ledger;
}

}  // namespace ffconv::runner
