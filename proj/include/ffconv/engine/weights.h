// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "ffconv/common/int128.h"
#include "ffconv/tensor/tensor.h"

namespace ffconv::engine {

// K x O_c quantized weights; real weight ~= entry * scale.
struct WeightMatrix {
    IntMatrix entries;
    int bits = 8;
    double scale = 1.0;

    std::size_t k() const { return entries.rows(); }
    std::size_t out_channels() const { return entries.cols(); }
    i128 max_abs() const;
    // Largest column sum of |entry|, the worst-case gain of one output.
    u128 max_column_l1() const;
};

struct BiasVector {
    std::vector<i128> entries;

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }
    i128 max_abs() const;
};

// Integer low-rank factors of one conv layer: W1 is d x d with `rank`
// outputs, W2 is 1 x 1 with O_c outputs.
struct QuantizedPair {
    WeightMatrix w1;
    WeightMatrix w2;

    std::size_t rank() const { return w1.out_channels(); }
};

// Row-major K x O_c matrix from an HWIO filter bank, rows in patch_index order.
IntMatrix filter_to_matrix(const IntFilter& filter);
IntFilter matrix_to_filter(const IntMatrix& m, std::size_t d);

}  // namespace ffconv::engine
