// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

// Worst-case magnitude ledger. Each layer's bound covers its output and
// every partial sum the engine forms on the way, so a layer whose bound
// satisfies 2 * bound < t cannot wrap around the plaintext modulus.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ffconv/common/int128.h"
#include "ffconv/runner/network.h"
#include "ffconv/runner/weights_io.h"

namespace ffconv::runner {

struct LayerBound {
    std::size_t layer = 0;
    std::string name;
    u128 bound = 0;      // saturates at 2^127
    double scale = 1.0;  // real value ~= integer * scale
    bool fits = true;    // 2 * bound < t
};

struct ScaleLedger {
    u128 plain_modulus = 0;
    u128 input_bound = 0;
    double input_scale = 1.0;
    std::vector<LayerBound> layers;

    bool ok() const { return !first_violation().has_value(); }
    std::optional<std::size_t> first_violation() const;
    // Throws ModulusTooSmallError for the first layer that does not fit.
    void require_fits() const;
    std::string describe() const;
};

// Per layer: conv and fc give max_column_l1(w) * b + max|bias|; ffconv
// takes the larger of its W1 stage and its full output; square gives b^2;
// pooling d^2 b. b is the previous bound, starting at `input_bound`.
ScaleLedger build_ledger(const NetworkSpec& net, const NetworkWeights& weights, u128 input_bound,
                         double input_scale = 1.0);

}  // namespace ffconv::runner
