// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "ffconv/engine/weights.h"
#include "ffconv/tensor/tensor.h"

namespace ffconv::factor {

// Real rank-r factors: w1 is K x r, w2 is r x O_c, w ~= w1 * w2.
struct FactorizedPair {
    RealMatrix w1;
    RealMatrix w2;

    std::size_t rank() const { return w1.cols(); }
};

// Thin SVD w = U diag(sigma) V^T with sigma sorted descending.
// U is K x p, V is O_c x p, p = min(K, O_c).
struct Svd {
    RealMatrix u;
    std::vector<double> sigma;
    RealMatrix v;
};

// K x O_c matrix whose column o flattens filter o in Im2Col column order.
RealMatrix weights_to_matrix(const RealFilter& filter);
engine::WeightMatrix weights_to_matrix(const IntFilter& filter, int bits, double scale);

// Jacobi eigendecomposition of the smaller Gram matrix, refined by
// one-sided Jacobi sweeps until every pair of columns is orthogonal to
// 1e-10 relative. Throws NumericalError when the sweeps do not converge.
Svd svd(const RealMatrix& w);

// Best rank-r approximation with the singular values folded into w1.
// Throws std::invalid_argument unless 1 <= r <= min(K, O_c).
FactorizedPair truncated_svd(const RealMatrix& w, std::size_t r);
FactorizedPair truncated_svd(const Svd& decomposition, std::size_t r);

RealMatrix multiply(const RealMatrix& a, const RealMatrix& b);
double frobenius_norm(const RealMatrix& m);
// ||w - w1 w2||_F. Throws ShapeError on mismatched shapes.
double reconstruction_error(const RealMatrix& w, const FactorizedPair& pair);

// Smallest r whose relative error ||w - w_r||_F / ||w||_F is <= budget,
// computed from the singular-value tail. Budget must lie in [0, 1).
std::size_t rank_search(const RealMatrix& w, double budget);
std::size_t rank_search(const std::vector<double>& sigma, double budget);

// Symmetric per-matrix quantization, round half away from zero:
// scale = max|entry| / (2^(bits-1) - 1). An all-zero matrix gets scale 1.
engine::WeightMatrix quantize(const RealMatrix& m, int bits);
RealMatrix dequantize(const engine::WeightMatrix& q);
engine::QuantizedPair quantize_factors(const FactorizedPair& pair, int bits);

}  // namespace ffconv::factor
