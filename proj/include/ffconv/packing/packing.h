// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "ffconv/he/evaluator.h"
#include "ffconv/tensor/tensor.h"

namespace ffconv::packing {

// Whole tensor in one ciphertext at slot ch*w*h + y*w + x.
struct DensePacked {
    he::SlotCiphertext ct;
    TensorShape shape;
};

// Im2Col columns: ciphertext k, slot s holds I[s, k], s = oy*out_w + ox.
// A replicated pack repeats each column `replicas` times back to back, so
// slot r*S + s also holds I[s, k].
struct ConvPacked {
    std::vector<he::SlotCiphertext> cts;
    std::size_t out_w = 0;
    std::size_t out_h = 0;
    std::size_t replicas = 1;

    std::size_t rows() const { return out_w * out_h; }
    std::size_t cols() const { return cts.size(); }
};

// One ciphertext per channel, slot y*w + x. This is what conv_conv emits.
struct ChannelPacked {
    std::vector<he::SlotCiphertext> cts;
    TensorShape shape;
};

using PackedTensor = std::variant<DensePacked, ConvPacked, ChannelPacked>;

DensePacked dense_pack(const Tensor3& tensor, const he::Evaluator& ev);
Tensor3 dense_unpack(const DensePacked& x, const he::Evaluator& ev);

ChannelPacked channel_pack(const Tensor3& tensor, const he::Evaluator& ev);
Tensor3 channel_unpack(const ChannelPacked& x, const he::Evaluator& ev);

// S x K patch matrix; row s = oy*O_w + ox, column patch_index(dx, dy, ch).
IntMatrix plain_im2col(const Tensor3& tensor, const KernelSpec& kernel);

// out_w * out_h must equal I.rows(). The two-argument form uses a 1-row grid.
ConvPacked conv_pack(const IntMatrix& im, std::size_t out_w, std::size_t out_h, const he::Evaluator& ev);
ConvPacked conv_pack(const IntMatrix& im, const he::Evaluator& ev);
IntMatrix conv_unpack(const ConvPacked& x, const he::Evaluator& ev);
// Client-side layout for a first layer whose output should land dense:
// one block of S slots per output channel.
ConvPacked conv_pack_replicated(const IntMatrix& im, std::size_t out_w, std::size_t out_h, std::size_t replicas,
                                const he::Evaluator& ev);

// Homomorphic Im2Col for any kernel except 1x1 stride 1. Each distinct source element is masked once
// (transition mul_pc), then every destination slot gets one rotate-and-add.
ConvPacked h_im2col_from_dense(const DensePacked& x, const KernelSpec& kernel, he::Evaluator& ev);
ConvPacked h_im2col_from_conv(const ChannelPacked& x, const KernelSpec& kernel, he::Evaluator& ev);

// d = 1, stride 1: the per-channel list already is the Im2Col matrix.
ConvPacked h_grouping(const ChannelPacked& x, const KernelSpec& kernel);
// d = 1, stride 1 from dense: one band mask and one alignment rotation per
// channel. Channel 0 rotates by zero.
ConvPacked h_grouping_from_dense(const DensePacked& x, const KernelSpec& kernel, he::Evaluator& ev);

// Concatenates payloads [0, L_i) in order. m - 1 rotations and additions.
// `shape` describes the concatenated tensor and must have size sum(L_i).
DensePacked combine_to_dense(const std::vector<he::SlotCiphertext>& xs, const std::vector<std::size_t>& lengths,
                             const TensorShape& shape, he::Evaluator& ev);
DensePacked combine_to_dense(const ChannelPacked& x, he::Evaluator& ev);

// Number of distinct source elements an Im2Col touches. With stride 1 this
// is the whole input.
std::size_t im2col_source_count(const TensorShape& in, const KernelSpec& kernel);

}  // namespace ffconv::packing
