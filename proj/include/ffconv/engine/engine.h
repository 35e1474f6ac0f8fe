// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "ffconv/engine/stage_log.h"
#include "ffconv/engine/weights.h"
#include "ffconv/he/evaluator.h"
#include "ffconv/packing/packing.h"

namespace ffconv::engine {

using packing::ChannelPacked;
using packing::ConvPacked;
using packing::DensePacked;
using packing::PackedTensor;

// Where conv_dense places its O results.
enum class Assembly {
    kDense,       // one dense ciphertext, index o*S + s
    kPerChannel,  // one ciphertext per output channel, slot s
};

// FFConv packing patterns: first-stage scheme, transition, second-stage scheme.
enum class Pattern {
    kDpHi2cCp,
    kCpHi2cCp,
    kCpHi2cDp,
    kDpDp,
};

std::string_view pattern_name(Pattern p);
// Accepts "DP-HI2C-CP" etc., case-insensitive. Throws std::invalid_argument.
Pattern parse_pattern(std::string_view name);
inline constexpr Pattern kAllPatterns[] = {Pattern::kCpHi2cDp, Pattern::kCpHi2cCp, Pattern::kDpDp,
                                           Pattern::kDpHi2cCp};

// Geometry of a DensePack convolution for one output.
struct DenseSpan {
    std::size_t footprint = 0;  // m: slots between the first and last filter tap, inclusive
    int log2_span = 0;          // r = ceil(log2 m)
};
DenseSpan dense_conv_span(const TensorShape& in, const KernelSpec& kernel, bool depthwise = false);

// Convolution on a dense ciphertext: one mul_plain and a rotate-and-sum of
// span 2^r per output, then one assembly mask per output. A result whose
// destination slot already holds the full sum is masked in place; otherwise
// it is masked at its window start and rotated once.
PackedTensor conv_dense(const DensePacked& x, const WeightMatrix& w, const KernelSpec& kernel, Assembly assembly,
                        he::Evaluator& ev, const BiasVector* bias = nullptr, StageLog* log = nullptr,
                        const std::string& stage_prefix = "");

// Convolution on Im2Col columns with broadcast scalar weights. Rotation-free.
ChannelPacked conv_conv(const ConvPacked& x, const WeightMatrix& w, he::Evaluator& ev,
                        const BiasVector* bias = nullptr, StageLog* log = nullptr,
                        const std::string& stage_prefix = "");

// Convolution on a replicated Im2Col pack (x.replicas == O_c). One
// mul_plain per column with weight w[k, o] spread over block o; the result
// is already dense. K multiplications, K - 1 additions, no rotations.
DensePacked conv_conv_replicated(const ConvPacked& x, const WeightMatrix& w, he::Evaluator& ev,
                                 const BiasVector* bias = nullptr, StageLog* log = nullptr,
                                 const std::string& stage_prefix = "");

// Low-rank conv layer: W1 (d x d, rank outputs) then W2 (1 x 1, O_c outputs).
// Accepts any layout and converts it to what the pattern's first stage
// needs; that conversion is logged as "<prefix>input".
PackedTensor ffconv_layer(const PackedTensor& x, const QuantizedPair& pair, const KernelSpec& kernel,
                          Pattern pattern, he::Evaluator& ev, const BiasVector* bias = nullptr,
                          StageLog* log = nullptr, const std::string& stage_prefix = "");

// Fully connected layer over the whole dense payload. Output o sits in slot 0
// of ciphertext o. With mask_outputs the other slots are cleared so the
// result can be combined later.
ChannelPacked fc_dense(const DensePacked& x, const WeightMatrix& w, const BiasVector& bias, he::Evaluator& ev,
                       bool mask_outputs = false, StageLog* log = nullptr, const std::string& stage_prefix = "");

// Sum pooling over a d x d window per channel; the 1/d^2 factor is left to
// the scale ledger. window.out_channels is ignored. Im2Col columns built
// for the window are accepted as they are.
PackedTensor avg_pool(const PackedTensor& x, const KernelSpec& window, he::Evaluator& ev, StageLog* log = nullptr,
                      const std::string& stage_prefix = "");

PackedTensor square_layer(const PackedTensor& x, he::Evaluator& ev, StageLog* log = nullptr,
                          const std::string& stage_prefix = "");

// Layout conversions shared by the runner.
DensePacked to_dense(const PackedTensor& x, he::Evaluator& ev);
// Im2Col form for `kernel` over x's spatial grid.
ConvPacked to_conv(const PackedTensor& x, const KernelSpec& kernel, he::Evaluator& ev);

TensorShape packed_shape(const PackedTensor& x);
// Largest multiplicative and assembly depth over all ciphertexts.
int packed_depth(const PackedTensor& x);
int packed_assembly_depth(const PackedTensor& x);

}  // namespace ffconv::engine
