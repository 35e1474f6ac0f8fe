// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffconv/engine/weights.h"

#include <algorithm>

#include "ffconv/common/error.h"

namespace ffconv::engine {

i128 WeightMatrix::max_abs() const {
    i128 best = 0;
    for (i128 v : entries.data()) {
        best = std::max<i128>(best, static_cast<i128>(abs128(v)));
    }
    return best;
}

u128 WeightMatrix::max_column_l1() const {
    u128 best = 0;
    for (std::size_t o = 0; o < entries.cols(); ++o) {
        u128 sum = 0;
        for (std::size_t k = 0; k < entries.rows(); ++k) {
            sum = sat_add(sum, abs128(entries(k, o)));
        }
        best = std::max(best, sum);
    }
    return best;
}

i128 BiasVector::max_abs() const {
    i128 best = 0;
    for (i128 v : entries) {
        best = std::max<i128>(best, static_cast<i128>(abs128(v)));
    }
    return best;
}

IntMatrix filter_to_matrix(const IntFilter& filter) {
    const std::size_t d = filter.d();
    IntMatrix m(d * d * filter.in_channels(), filter.out_channels());
    for (std::size_t ch = 0; ch < filter.in_channels(); ++ch) {
        for (std::size_t dy = 0; dy < d; ++dy) {
            for (std::size_t dx = 0; dx < d; ++dx) {
                for (std::size_t o = 0; o < filter.out_channels(); ++o) {
                    m(patch_index(dx, dy, ch, d), o) = filter.at(dx, dy, ch, o);
                }
            }
        }
    }
    return m;
}

IntFilter matrix_to_filter(const IntMatrix& m, std::size_t d) {
    if (d == 0 || m.rows() % (d * d) != 0) {
        throw ShapeError("matrix rows are not a multiple of d^2");
    }
    const std::size_t in = m.rows() / (d * d);
    IntFilter f(d, in, m.cols());
    for (std::size_t ch = 0; ch < in; ++ch) {
        for (std::size_t dy = 0; dy < d; ++dy) {
            for (std::size_t dx = 0; dx < d; ++dx) {
                for (std::size_t o = 0; o < m.cols(); ++o) {
                    f.at(dx, dy, ch, o) = m(patch_index(dx, dy, ch, d), o);
                }
            }
        }
    }
    return f;
}

}  // namespace ffconv::engine
