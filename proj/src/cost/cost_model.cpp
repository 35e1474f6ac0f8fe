// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffconv/cost/cost_model.h"

#include <algorithm>
#include <stdexcept>

namespace ffconv::cost {

using engine::Pattern;

namespace {

bool pointwise(const KernelSpec& k) { return k.d == 1 && k.stride == 1; }

}  // namespace

CostTriple predict_dense(const TensorShape& in, const KernelSpec& kernel, std::size_t slot_count,
                         std::optional<std::size_t> span) {
    kernel.validate(in);
    const std::size_t m = span.value_or(in.size());
    if (m == 0 || m > slot_count) {
        throw std::invalid_argument("dense span " + std::to_string(m) + " outside [1, N=" +
                                    std::to_string(slot_count) + "]");
    }
    const std::uint64_t o = kernel.output_shape(in).size();
    const std::uint64_t r = static_cast<std::uint64_t>(ceil_log2(m));
    return {o, o * r, o * r};
}

CostTriple predict_conv(std::size_t out_channels, std::size_t k) {
    if (k == 0) {
        throw std::invalid_argument("K must be positive");
    }
    return {out_channels * k, out_channels * (k - 1), 0};
}

CostTriple predict_transition(Pattern pattern, const TensorShape& first_out, const KernelSpec& second) {
    switch (pattern) {
        case Pattern::kCpHi2cDp:
            return {0, first_out.c - 1, first_out.c - 1};
        case Pattern::kCpHi2cCp:
        case Pattern::kDpHi2cCp: {
            if (pointwise(second)) {
                if (pattern == Pattern::kCpHi2cCp) {
                    return {};
                }
                return {first_out.c, 0, first_out.c};
            }
            second.validate(first_out);
            const std::uint64_t s = second.out_w(first_out) * second.out_h(first_out);
            const std::uint64_t k = second.patch_size(first_out);
            return {first_out.size(), s * k, s * k};
        }
        case Pattern::kDpDp:
            break;
    }
    throw std::invalid_argument("DP-DP has no homomorphic Im2Col transition");
}

CostTriple predict_factorized_conv(std::size_t k, std::size_t out_channels, std::size_t rank) {
    const std::uint64_t mul = rank * (k + out_channels);
    return {mul, mul - rank - out_channels, 0};
}

std::uint64_t published_factorized_add(std::size_t k, std::size_t out_channels, std::size_t rank) {
    return rank * (k + out_channels) - k - rank;
}

const std::vector<DocumentedRow>& documented_rows() {
    static const std::vector<DocumentedRow> kRows = {
        {"LoLa", "dense conv", "O", "O log2 N", "O log2 N"},
        {"Falcon", "dense conv", "~3 O / p", "~O log2 N / p", "~O log2 N / p"},
        {"Ours", "dense conv", "O'", "O' log2 N", "O' log2 N"},
        {"LoLa", "column conv", "O_c K", "O_c (K - 1)", "0"},
        {"Falcon", "column conv", "O_c K", "O_c (K - 1)", "0"},
        {"Ours", "column conv", "O'_c (K + O_c)", "O'_c (K + O_c) - K - O'_c", "0"},
    };
    return kRows;
}

std::vector<PatternCost> compare_patterns(const TensorShape& in, const KernelSpec& kernel, std::size_t rank,
                                          std::size_t slot_count, Upstream upstream, double rotation_weight) {
    const KernelSpec k1{kernel.d, kernel.stride, rank};
    k1.validate(in);
    const TensorShape mid = k1.output_shape(in);
    const KernelSpec k2{1, 1, kernel.out_channels};
    const std::size_t k = k1.patch_size(in);

    std::vector<PatternCost> out;
    for (Pattern p : {Pattern::kDpHi2cCp, Pattern::kDpDp, Pattern::kCpHi2cCp, Pattern::kCpHi2cDp}) {
        const bool dense_first = p == Pattern::kDpHi2cCp || p == Pattern::kDpDp;
        PatternCost c{p, {}, {}, {}, {}, {}, 0};
        if (upstream == Upstream::kDense && !dense_first) {
            c.upstream = predict_transition(Pattern::kDpHi2cCp, in, k1);
        } else if (upstream == Upstream::kChannel) {
            c.upstream = dense_first ? predict_transition(Pattern::kCpHi2cDp, in, k1)
                                     : predict_transition(Pattern::kCpHi2cCp, in, k1);
        }
        c.first = dense_first ? predict_dense(in, k1, slot_count) : predict_conv(rank, k);
        if (p != Pattern::kDpDp) {
            c.transition = predict_transition(p, mid, k2);
        }
        const bool dense_second = p == Pattern::kCpHi2cDp || p == Pattern::kDpDp;
        c.second = dense_second ? predict_dense(mid, k2, slot_count) : predict_conv(kernel.out_channels, rank);
        c.total = c.upstream + c.first + c.transition + c.second;
        c.weighted = c.total.weighted(rotation_weight);
        out.push_back(c);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const PatternCost& a, const PatternCost& b) { return a.weighted < b.weighted; });
    return out;
}

}  // namespace ffconv::cost
