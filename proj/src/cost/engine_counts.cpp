// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffconv/cost/engine_counts.h"

#include <stdexcept>

namespace ffconv::cost {

using engine::Assembly;
using engine::Pattern;
using he::OpCounters;

namespace {

bool pointwise(const KernelSpec& k) { return k.d == 1 && k.stride == 1; }

// Distinct coordinates read along one axis.
std::size_t covered(std::size_t outputs, std::size_t d, std::size_t stride) {
    std::vector<bool> seen(outputs == 0 ? 0 : (outputs - 1) * stride + d, false);
    std::size_t count = 0;
    for (std::size_t o = 0; o < outputs; ++o) {
        for (std::size_t k = 0; k < d; ++k) {
            if (!seen[o * stride + k]) {
                seen[o * stride + k] = true;
                ++count;
            }
        }
    }
    return count;
}

// Shared by dense convolution and dense pooling: `footprint` slots per
// window, channel o's windows start at base(o).
template <typename Base>
Stages dense_stages(const TensorShape& in, const KernelSpec& kernel, std::size_t out_channels, std::size_t footprint,
                    Base base, Assembly assembly, bool bias, std::size_t n, const std::string& prefix) {
    const std::size_t ow = kernel.out_w(in);
    const std::size_t oh = kernel.out_h(in);
    const std::size_t s_count = ow * oh;
    const std::uint64_t outputs = s_count * out_channels;
    const int r = ceil_log2(footprint);
    const std::size_t span = std::size_t{1} << r;

    Stages stages;
    OpCounters dot = rotate_and_sum_ops(r);
    dot.rot *= outputs;
    dot.add_cc *= outputs;
    dot.mul_pc = outputs;
    stages.push_back({prefix + "dot", dot});

    OpCounters placed;
    placed.assembly_mul_pc = outputs;
    for (std::size_t o = 0; o < out_channels; ++o) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const std::size_t lo = base(o) + oy * kernel.stride * in.w + ox * kernel.stride;
                const std::size_t s = oy * ow + ox;
                const std::size_t dest = assembly == Assembly::kDense ? o * s_count + s : s;
                if ((lo + n - dest) % n + footprint > span) {
                    ++placed.rot;
                }
            }
        }
    }
    placed.add_cc = assembly == Assembly::kDense ? outputs - 1 : outputs - out_channels;
    stages.push_back({prefix + "assembly", placed});
    if (bias) {
        OpCounters b;
        b.add_pc = assembly == Assembly::kDense ? 1 : out_channels;
        stages.push_back({prefix + "bias", b});
    }
    return stages;
}

void append(Stages& dst, const Stages& src) { dst.insert(dst.end(), src.begin(), src.end()); }

}  // namespace

OpCounters rotate_and_sum_ops(int log2_span) {
    OpCounters c;
    c.rot = static_cast<std::uint64_t>(log2_span);
    c.add_cc = static_cast<std::uint64_t>(log2_span);
    return c;
}

OpCounters h_im2col_ops(const TensorShape& in, const KernelSpec& kernel, Layout from) {
    if (from == Layout::kColumns) {
        throw std::invalid_argument("Im2Col input is already in columns");
    }
    kernel.validate(in);
    const std::size_t ow = kernel.out_w(in);
    const std::size_t oh = kernel.out_h(in);
    const std::size_t d = kernel.d;
    OpCounters c;
    c.mul_pc = covered(ow, d, kernel.stride) * covered(oh, d, kernel.stride) * in.c;
    for (std::size_t ch = 0; ch < in.c; ++ch) {
        for (std::size_t dy = 0; dy < d; ++dy) {
            for (std::size_t dx = 0; dx < d; ++dx) {
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        const std::size_t plane = (oy * kernel.stride + dy) * in.w + ox * kernel.stride + dx;
                        const std::size_t slot = from == Layout::kDense ? ch * in.spatial() + plane : plane;
                        if (slot == oy * ow + ox) {
                            ++c.rot_elided;
                        } else {
                            ++c.rot;
                        }
                        ++c.add_cc;
                    }
                }
            }
        }
    }
    return c;
}

OpCounters h_grouping_from_dense_ops(std::size_t channels) {
    OpCounters c;
    c.mul_pc = channels;
    c.rot = channels - 1;
    c.rot_elided = 1;
    return c;
}

OpCounters combine_ops(std::size_t pieces) {
    OpCounters c;
    c.rot = pieces - 1;
    c.add_cc = pieces - 1;
    return c;
}

OpCounters to_dense_ops(const TensorShape& shape, Layout from) {
    switch (from) {
        case Layout::kDense:
            return {};
        case Layout::kChannel:
            return combine_ops(shape.c);
        case Layout::kColumns:
            break;
    }
    throw std::invalid_argument("Im2Col columns cannot be converted to a dense tensor");
}

OpCounters to_conv_ops(const TensorShape& shape, const KernelSpec& kernel, Layout from) {
    if (from == Layout::kColumns) {
        return {};
    }
    if (pointwise(kernel)) {
        return from == Layout::kDense ? h_grouping_from_dense_ops(shape.c) : OpCounters{};
    }
    return h_im2col_ops(shape, kernel, from);
}

Stages conv_dense_stages(const TensorShape& in, const KernelSpec& kernel, Assembly assembly, bool bias,
                         std::size_t slot_count, const std::string& prefix) {
    kernel.validate(in);
    const std::size_t footprint = (in.c - 1) * in.spatial() + (kernel.d - 1) * in.w + kernel.d;
    return dense_stages(
        in, kernel, kernel.out_channels, footprint, [](std::size_t) { return std::size_t{0}; }, assembly, bias,
        slot_count, prefix);
}

Stages conv_conv_stages(std::size_t k, std::size_t out_channels, bool bias, const std::string& prefix) {
    Stages stages;
    OpCounters c;
    c.mul_pc = out_channels * k;
    c.add_cc = out_channels * (k - 1);
    stages.push_back({prefix + "conv", c});
    if (bias) {
        OpCounters b;
        b.add_pc = out_channels;
        stages.push_back({prefix + "bias", b});
    }
    return stages;
}

Stages conv_conv_replicated_stages(std::size_t k, bool bias, const std::string& prefix) {
    Stages stages;
    OpCounters c;
    c.mul_pc = k;
    c.add_cc = k - 1;
    stages.push_back({prefix + "conv", c});
    if (bias) {
        OpCounters b;
        b.add_pc = 1;
        stages.push_back({prefix + "bias", b});
    }
    return stages;
}

Stages ffconv_stages(const TensorShape& in, Layout from, const KernelSpec& kernel, std::size_t rank,
                     Pattern pattern, bool bias, std::size_t slot_count, const std::string& prefix) {
    const KernelSpec k1{kernel.d, kernel.stride, rank};
    const KernelSpec k2{1, 1, kernel.out_channels};
    const TensorShape mid = k1.output_shape(in);
    const std::size_t k = k1.patch_size(in);
    Stages stages;
    switch (pattern) {
        case Pattern::kDpHi2cCp:
            stages.push_back({prefix + "input", to_dense_ops(in, from)});
            append(stages, conv_dense_stages(in, k1, Assembly::kPerChannel, false, slot_count, prefix + "w1."));
            stages.push_back({prefix + "grouping", {}});
            append(stages, conv_conv_stages(rank, kernel.out_channels, bias, prefix + "w2."));
            break;
        case Pattern::kCpHi2cCp:
            stages.push_back({prefix + "input", to_conv_ops(in, k1, from)});
            append(stages, conv_conv_stages(k, rank, false, prefix + "w1."));
            stages.push_back({prefix + "grouping", {}});
            append(stages, conv_conv_stages(rank, kernel.out_channels, bias, prefix + "w2."));
            break;
        case Pattern::kCpHi2cDp:
            stages.push_back({prefix + "input", to_conv_ops(in, k1, from)});
            append(stages, conv_conv_stages(k, rank, false, prefix + "w1."));
            stages.push_back({prefix + "combine", combine_ops(rank)});
            append(stages, conv_dense_stages(mid, k2, Assembly::kDense, bias, slot_count, prefix + "w2."));
            break;
        case Pattern::kDpDp:
            stages.push_back({prefix + "input", to_dense_ops(in, from)});
            append(stages, conv_dense_stages(in, k1, Assembly::kDense, false, slot_count, prefix + "w1."));
            append(stages, conv_dense_stages(mid, k2, Assembly::kDense, bias, slot_count, prefix + "w2."));
            break;
    }
    return stages;
}

Stages fc_stages(std::size_t inputs, std::size_t outputs, bool mask_outputs, bool bias, const std::string& prefix) {
    Stages stages;
    OpCounters dot = rotate_and_sum_ops(ceil_log2(inputs));
    dot.rot *= outputs;
    dot.add_cc *= outputs;
    dot.mul_pc = outputs;
    stages.push_back({prefix + "dot", dot});
    if (mask_outputs) {
        OpCounters m;
        m.assembly_mul_pc = outputs;
        stages.push_back({prefix + "assembly", m});
    }
    if (bias) {
        OpCounters b;
        b.add_pc = outputs;
        stages.push_back({prefix + "bias", b});
    }
    return stages;
}

Stages avg_pool_stages(const TensorShape& in, Layout from, const KernelSpec& window, std::size_t slot_count,
                       const std::string& prefix) {
    const KernelSpec k{window.d, window.stride, in.c};
    if (from == Layout::kDense) {
        k.validate(in);
        const std::size_t footprint = (k.d - 1) * in.w + k.d;
        const std::size_t plane = in.spatial();
        return dense_stages(
            in, k, in.c, footprint, [plane](std::size_t o) { return o * plane; }, Assembly::kDense, false,
            slot_count, prefix);
    }
    Stages stages;
    stages.push_back({prefix + "input", from == Layout::kColumns ? OpCounters{} : to_conv_ops(in, k, from)});
    append(stages, conv_conv_stages(k.d * k.d * in.c, in.c, false, prefix));
    return stages;
}

Stages square_stages(std::size_t ciphertexts, const std::string& prefix) {
    OpCounters c;
    c.mul_cc = ciphertexts;
    return {{prefix + "square", c}};
}

OpCounters total(const Stages& stages) {
    OpCounters sum;
    for (const engine::Stage& s : stages) {
        sum += s.ops;
    }
    return sum;
}

}  // namespace ffconv::cost
