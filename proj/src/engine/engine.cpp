// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffconv/engine/engine.h"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ffconv/common/error.h"

namespace ffconv::engine {

using he::Evaluator;
using he::MaskUse;
using he::PlainVector;
using he::SlotCiphertext;

namespace {

struct Tap {
    std::size_t offset;
    i128 weight;
};

void mark(StageLog* log, const Evaluator& ev, const std::string& prefix, const char* name) {
    if (log != nullptr) {
        log->mark(ev, prefix + name);
    }
}

// Sparse plaintext: value v at each listed slot, zero elsewhere.
PlainVector sparse_plain(const std::vector<std::pair<std::size_t, i128>>& entries, const Evaluator& ev) {
    if (!ev.tracks_values()) {
        return PlainVector::constant(0, ev.params());
    }
    const u128 t = ev.params().plain_modulus;
    std::vector<u128> residues(ev.params().slot_count, 0);
    for (const auto& [slot, v] : entries) {
        residues[slot] = he::to_residue(v, t);
    }
    return PlainVector::from_residues(std::move(residues), ev.params());
}

PlainVector unit_mask(std::size_t slot, const Evaluator& ev) {
    if (!ev.tracks_values()) {
        return PlainVector::constant(0, ev.params());
    }
    return PlainVector::indicator(slot, slot + 1, ev.params());
}

// Value v on [begin, end), zero elsewhere.
PlainVector band_plain(std::size_t begin, std::size_t end, i128 v, const Evaluator& ev) {
    if (!ev.tracks_values()) {
        return PlainVector::constant(0, ev.params());
    }
    std::vector<std::pair<std::size_t, i128>> entries;
    for (std::size_t s = begin; s < end; ++s) {
        entries.emplace_back(s, v);
    }
    return sparse_plain(entries, ev);
}

void require_slots(std::size_t needed, const Evaluator& ev, const std::string& what) {
    if (needed > ev.params().slot_count) {
        throw CapacityError(what + " needs " + std::to_string(needed) + " slots but N=" +
                            std::to_string(ev.params().slot_count));
    }
}

// Dense convolution driver shared by conv_dense and pooling. taps[o] lists
// the filter of output channel o relative to its window start, and
// channel_base(o) is added to every window start of that channel.
template <typename ChannelBase>
PackedTensor dense_conv(const DensePacked& x, const KernelSpec& kernel, const std::vector<std::vector<Tap>>& taps,
                        ChannelBase channel_base, std::size_t footprint, Assembly assembly, Evaluator& ev,
                        const BiasVector* bias, StageLog* log, const std::string& prefix) {
    const TensorShape& in = x.shape;
    const std::size_t n = ev.params().slot_count;
    const std::size_t ow = kernel.out_w(in);
    const std::size_t oh = kernel.out_h(in);
    const std::size_t s_count = ow * oh;
    const std::size_t oc = taps.size();
    const TensorShape out_shape{ow, oh, oc};
    require_slots(in.size(), ev, "dense input " + in.str());
    if (assembly == Assembly::kDense) {
        require_slots(out_shape.size(), ev, "dense output " + out_shape.str());
    }
    if (bias != nullptr && bias->size() != oc) {
        throw ShapeError("bias length " + std::to_string(bias->size()) + " does not match " + std::to_string(oc) +
                         " output channels");
    }
    const int r = ceil_log2(footprint);
    const std::size_t span = std::size_t{1} << r;

    struct Partial {
        SlotCiphertext ct;
        std::size_t lo;
        std::size_t dest;
    };
    std::vector<Partial> partials;
    partials.reserve(out_shape.size());
    for (std::size_t o = 0; o < oc; ++o) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const std::size_t lo = channel_base(o) + oy * kernel.stride * in.w + ox * kernel.stride;
                std::vector<std::pair<std::size_t, i128>> entries;
                if (ev.tracks_values()) {
                    entries.reserve(taps[o].size());
                    for (const Tap& tap : taps[o]) {
                        entries.emplace_back(lo + tap.offset, tap.weight);
                    }
                }
                SlotCiphertext prod = ev.mul_plain(x.ct, sparse_plain(entries, ev));
                const std::size_t s = oy * ow + ox;
                const std::size_t dest = assembly == Assembly::kDense ? o * s_count + s : s;
                partials.push_back({ev.rotate_and_sum_span(prod, r), lo, dest});
            }
        }
    }
    mark(log, ev, prefix, "dot");

    // Slot j of a partial holds the full dot product iff the 2^r window
    // starting at j covers [lo, lo + m).
    auto complete_at = [&](std::size_t lo, std::size_t j) { return (lo + n - j) % n + footprint <= span; };
    auto place = [&](const Partial& p) {
        if (complete_at(p.lo, p.dest)) {
            return ev.mul_mask(p.ct, unit_mask(p.dest, ev), MaskUse::kAssembly);
        }
        SlotCiphertext picked = ev.mul_mask(p.ct, unit_mask(p.lo, ev), MaskUse::kAssembly);
        return ev.rotate_by(picked, static_cast<std::int64_t>(p.lo) - static_cast<std::int64_t>(p.dest));
    };

    PackedTensor result;
    if (assembly == Assembly::kDense) {
        SlotCiphertext acc = place(partials[0]);
        for (std::size_t i = 1; i < partials.size(); ++i) {
            acc = ev.add_cc(acc, place(partials[i]));
        }
        mark(log, ev, prefix, "assembly");
        if (bias != nullptr) {
            std::vector<std::pair<std::size_t, i128>> entries;
            if (ev.tracks_values()) {
                for (std::size_t o = 0; o < oc; ++o) {
                    for (std::size_t s = 0; s < s_count; ++s) {
                        entries.emplace_back(o * s_count + s, bias->entries[o]);
                    }
                }
            }
            acc = ev.add_plain(acc, sparse_plain(entries, ev));
            mark(log, ev, prefix, "bias");
        }
        result = DensePacked{std::move(acc), out_shape};
    } else {
        ChannelPacked out;
        out.shape = out_shape;
        for (std::size_t o = 0; o < oc; ++o) {
            SlotCiphertext acc = place(partials[o * s_count]);
            for (std::size_t s = 1; s < s_count; ++s) {
                acc = ev.add_cc(acc, place(partials[o * s_count + s]));
            }
            out.cts.push_back(std::move(acc));
        }
        mark(log, ev, prefix, "assembly");
        if (bias != nullptr) {
            for (std::size_t o = 0; o < oc; ++o) {
                out.cts[o] = ev.add_plain(out.cts[o], band_plain(0, s_count, bias->entries[o], ev));
            }
            mark(log, ev, prefix, "bias");
        }
        result = std::move(out);
    }
    return result;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

IntMatrix pooling_matrix(std::size_t d, std::size_t channels) {
    IntMatrix m(d * d * channels, channels);
    for (std::size_t ch = 0; ch < channels; ++ch) {
        for (std::size_t dy = 0; dy < d; ++dy) {
            for (std::size_t dx = 0; dx < d; ++dx) {
                m(patch_index(dx, dy, ch, d), ch) = 1;
            }
        }
    }
    return m;
}

}  // namespace

std::string_view pattern_name(Pattern p) {
    switch (p) {
        case Pattern::kDpHi2cCp:
            return "DP-HI2C-CP";
        case Pattern::kCpHi2cCp:
            return "CP-HI2C-CP";
        case Pattern::kCpHi2cDp:
            return "CP-HI2C-DP";
        case Pattern::kDpDp:
            return "DP-DP";
    }
    return "?";
}

Pattern parse_pattern(std::string_view name) {
    const std::string key = lower(name);
    for (Pattern p : kAllPatterns) {
        if (lower(pattern_name(p)) == key) {
            return p;
        }
    }
    throw std::invalid_argument("unknown packing pattern '" + std::string(name) +
                                "' (expected DP-HI2C-CP, CP-HI2C-CP, CP-HI2C-DP or DP-DP)");
}

DenseSpan dense_conv_span(const TensorShape& in, const KernelSpec& kernel, bool depthwise) {
    kernel.validate(in);
    const std::size_t channels = depthwise ? 1 : in.c;
    DenseSpan span;
    span.footprint = (channels - 1) * in.spatial() + (kernel.d - 1) * in.w + kernel.d;
    span.log2_span = ceil_log2(span.footprint);
    return span;
}

PackedTensor conv_dense(const DensePacked& x, const WeightMatrix& w, const KernelSpec& kernel, Assembly assembly,
                        Evaluator& ev, const BiasVector* bias, StageLog* log, const std::string& stage_prefix) {
    const TensorShape& in = x.shape;
    kernel.validate(in);
    if (w.k() != kernel.patch_size(in) || w.out_channels() != kernel.out_channels) {
        throw ShapeError("weight matrix " + std::to_string(w.k()) + "x" + std::to_string(w.out_channels()) +
                         " does not match kernel K=" + std::to_string(kernel.patch_size(in)) +
                         " O_c=" + std::to_string(kernel.out_channels));
    }
    const std::size_t d = kernel.d;
    std::vector<std::vector<Tap>> taps(kernel.out_channels);
    for (std::size_t o = 0; o < kernel.out_channels; ++o) {
        for (std::size_t ch = 0; ch < in.c; ++ch) {
            for (std::size_t dy = 0; dy < d; ++dy) {
                for (std::size_t dx = 0; dx < d; ++dx) {
                    taps[o].push_back({ch * in.spatial() + dy * in.w + dx, w.entries(patch_index(dx, dy, ch, d), o)});
                }
            }
        }
    }
    const DenseSpan span = dense_conv_span(in, kernel);
    return dense_conv(
        x, kernel, taps, [](std::size_t) { return std::size_t{0}; }, span.footprint, assembly, ev, bias, log,
        stage_prefix);
}

ChannelPacked conv_conv(const ConvPacked& x, const WeightMatrix& w, Evaluator& ev, const BiasVector* bias,
                        StageLog* log, const std::string& stage_prefix) {
    if (x.cols() != w.k() || x.cols() == 0) {
        throw ShapeError("conv_conv: " + std::to_string(x.cols()) + " input ciphertexts but weight K=" +
                         std::to_string(w.k()));
    }
    if (x.replicas != 1) {
        throw std::invalid_argument("conv_conv expects an unreplicated Im2Col pack");
    }
    const std::size_t oc = w.out_channels();
    if (bias != nullptr && bias->size() != oc) {
        throw ShapeError("bias length does not match output channels");
    }
    ChannelPacked out;
    out.shape = {x.out_w, x.out_h, oc};
    for (std::size_t o = 0; o < oc; ++o) {
        SlotCiphertext acc = ev.mul_plain(x.cts[0], PlainVector::constant(w.entries(0, o), ev.params()));
        for (std::size_t k = 1; k < x.cols(); ++k) {
            acc = ev.add_cc(acc, ev.mul_plain(x.cts[k], PlainVector::constant(w.entries(k, o), ev.params())));
        }
        out.cts.push_back(std::move(acc));
    }
    mark(log, ev, stage_prefix, "conv");
    if (bias != nullptr) {
        for (std::size_t o = 0; o < oc; ++o) {
            out.cts[o] = ev.add_plain(out.cts[o], band_plain(0, x.rows(), bias->entries[o], ev));
        }
        mark(log, ev, stage_prefix, "bias");
    }
    return out;
}

DensePacked conv_conv_replicated(const ConvPacked& x, const WeightMatrix& w, Evaluator& ev, const BiasVector* bias,
                                 StageLog* log, const std::string& stage_prefix) {
    if (x.cols() != w.k() || x.cols() == 0) {
        throw ShapeError("conv_conv_replicated: " + std::to_string(x.cols()) + " input ciphertexts but weight K=" +
                         std::to_string(w.k()));
    }
    const std::size_t oc = w.out_channels();
    if (x.replicas != oc) {
        throw ShapeError("replicated pack holds " + std::to_string(x.replicas) + " copies but the layer has " +
                         std::to_string(oc) + " output channels");
    }
    if (bias != nullptr && bias->size() != oc) {
        throw ShapeError("bias length does not match output channels");
    }
    const std::size_t s_count = x.rows();
    auto blocks = [&](auto value_of) {
        std::vector<std::pair<std::size_t, i128>> entries;
        if (ev.tracks_values()) {
            for (std::size_t o = 0; o < oc; ++o) {
                for (std::size_t s = 0; s < s_count; ++s) {
                    entries.emplace_back(o * s_count + s, value_of(o));
                }
            }
        }
        return sparse_plain(entries, ev);
    };
    SlotCiphertext acc = ev.mul_plain(x.cts[0], blocks([&](std::size_t o) { return w.entries(0, o); }));
    for (std::size_t k = 1; k < x.cols(); ++k) {
        acc = ev.add_cc(acc, ev.mul_plain(x.cts[k], blocks([&](std::size_t o) { return w.entries(k, o); })));
    }
    mark(log, ev, stage_prefix, "conv");
    if (bias != nullptr) {
        acc = ev.add_plain(acc, blocks([&](std::size_t o) { return bias->entries[o]; }));
        mark(log, ev, stage_prefix, "bias");
    }
    return DensePacked{std::move(acc), {x.out_w, x.out_h, oc}};
}

PackedTensor ffconv_layer(const PackedTensor& x, const QuantizedPair& pair, const KernelSpec& kernel,
                          Pattern pattern, Evaluator& ev, const BiasVector* bias, StageLog* log,
                          const std::string& stage_prefix) {
    const std::size_t rank = pair.rank();
    if (pair.w2.k() != rank || pair.w2.out_channels() != kernel.out_channels) {
        throw ShapeError("factor shapes do not chain: W1 has " + std::to_string(rank) + " outputs, W2 is " +
                         std::to_string(pair.w2.k()) + "x" + std::to_string(pair.w2.out_channels()));
    }
    const KernelSpec k1{kernel.d, kernel.stride, rank};
    const KernelSpec k2{1, 1, kernel.out_channels};
    const bool dense_first = pattern == Pattern::kDpHi2cCp || pattern == Pattern::kDpDp;

    if (dense_first && std::holds_alternative<ConvPacked>(x)) {
        throw std::invalid_argument(std::string(pattern_name(pattern)) + " needs a dense input, got Im2Col columns");
    }
    const std::string p = stage_prefix;
    switch (pattern) {
        case Pattern::kDpHi2cCp: {
            const DensePacked dx = to_dense(x, ev);
            mark(log, ev, p, "input");
            auto w1 = std::get<ChannelPacked>(conv_dense(dx, pair.w1, k1, Assembly::kPerChannel, ev, nullptr, log,
                                                         p + "w1."));
            const ConvPacked grouped = packing::h_grouping(w1, k2);
            mark(log, ev, p, "grouping");
            return conv_conv(grouped, pair.w2, ev, bias, log, p + "w2.");
        }
        case Pattern::kCpHi2cCp: {
            const ConvPacked cx = to_conv(x, k1, ev);
            mark(log, ev, p, "input");
            const ChannelPacked w1 = conv_conv(cx, pair.w1, ev, nullptr, log, p + "w1.");
            const ConvPacked grouped = packing::h_grouping(w1, k2);
            mark(log, ev, p, "grouping");
            return conv_conv(grouped, pair.w2, ev, bias, log, p + "w2.");
        }
        case Pattern::kCpHi2cDp: {
            const ConvPacked cx = to_conv(x, k1, ev);
            mark(log, ev, p, "input");
            const ChannelPacked w1 = conv_conv(cx, pair.w1, ev, nullptr, log, p + "w1.");
            const DensePacked combined = packing::combine_to_dense(w1, ev);
            mark(log, ev, p, "combine");
            return conv_dense(combined, pair.w2, k2, Assembly::kDense, ev, bias, log, p + "w2.");
        }
        case Pattern::kDpDp: {
            const DensePacked dx = to_dense(x, ev);
            mark(log, ev, p, "input");
            auto w1 = std::get<DensePacked>(conv_dense(dx, pair.w1, k1, Assembly::kDense, ev, nullptr, log,
                                                       p + "w1."));
            return conv_dense(w1, pair.w2, k2, Assembly::kDense, ev, bias, log, p + "w2.");
        }
    }
    throw std::logic_error("unhandled pattern");
}

ChannelPacked fc_dense(const DensePacked& x, const WeightMatrix& w, const BiasVector& bias, Evaluator& ev,
                       bool mask_outputs, StageLog* log, const std::string& stage_prefix) {
    const std::size_t m = x.shape.size();
    if (w.k() != m) {
        throw ShapeError("fc weight has K=" + std::to_string(w.k()) + " but the input holds " + std::to_string(m) +
                         " values");
    }
    const std::size_t oc = w.out_channels();
    if (!bias.empty() && bias.size() != oc) {
        throw ShapeError("fc bias length does not match output count");
    }
    ChannelPacked out;
    out.shape = {1, 1, oc};
    for (std::size_t o = 0; o < oc; ++o) {
        std::vector<std::pair<std::size_t, i128>> entries;
        if (ev.tracks_values()) {
            for (std::size_t k = 0; k < m; ++k) {
                entries.emplace_back(k, w.entries(k, o));
            }
        }
        const SlotCiphertext prod = ev.mul_plain(x.ct, sparse_plain(entries, ev));
        out.cts.push_back(ev.rotate_and_sum(prod, m));
    }
    mark(log, ev, stage_prefix, "dot");
    if (mask_outputs) {
        for (std::size_t o = 0; o < oc; ++o) {
            out.cts[o] = ev.mul_mask(out.cts[o], unit_mask(0, ev), MaskUse::kAssembly);
        }
        mark(log, ev, stage_prefix, "assembly");
    }
    if (!bias.empty()) {
        for (std::size_t o = 0; o < oc; ++o) {
            out.cts[o] = ev.add_plain(out.cts[o], band_plain(0, 1, bias.entries[o], ev));
        }
        mark(log, ev, stage_prefix, "bias");
    }
    return out;
}

PackedTensor avg_pool(const PackedTensor& x, const KernelSpec& window, Evaluator& ev, StageLog* log,
                      const std::string& stage_prefix) {
    if (const auto* cols = std::get_if<ConvPacked>(&x)) {
        const std::size_t taps = window.d * window.d;
        if (window.d == 0 || cols->cols() % taps != 0) {
            throw ShapeError("pooling window " + std::to_string(window.d) + "x" + std::to_string(window.d) +
                             " does not divide " + std::to_string(cols->cols()) + " Im2Col columns");
        }
        mark(log, ev, stage_prefix, "input");
        WeightMatrix pool{pooling_matrix(window.d, cols->cols() / taps), 2, 1.0};
        return conv_conv(*cols, pool, ev, nullptr, log, stage_prefix);
    }
    const TensorShape in = packed_shape(x);
    const KernelSpec k{window.d, window.stride, in.c};
    k.validate(in);
    if (const auto* dx = std::get_if<DensePacked>(&x)) {
        std::vector<std::vector<Tap>> taps(in.c);
        for (std::size_t ch = 0; ch < in.c; ++ch) {
            for (std::size_t dy = 0; dy < k.d; ++dy) {
                for (std::size_t dxx = 0; dxx < k.d; ++dxx) {
                    taps[ch].push_back({dy * in.w + dxx, 1});
                }
            }
        }
        const DenseSpan span = dense_conv_span(in, k, true);
        return dense_conv(
            *dx, k, taps, [&](std::size_t o) { return o * in.spatial(); }, span.footprint, Assembly::kDense, ev,
            nullptr, log, stage_prefix);
    }
    const ConvPacked cx = to_conv(x, k, ev);
    mark(log, ev, stage_prefix, "input");
    WeightMatrix pool{pooling_matrix(k.d, in.c), 2, 1.0};
    return conv_conv(cx, pool, ev, nullptr, log, stage_prefix);
}

PackedTensor square_layer(const PackedTensor& x, Evaluator& ev, StageLog* log, const std::string& stage_prefix) {
    PackedTensor out = std::visit(
        [&](const auto& v) -> PackedTensor {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, DensePacked>) {
                return DensePacked{ev.square(v.ct), v.shape};
            } else {
                T copy = v;
                for (auto& ct : copy.cts) {
                    ct = ev.square(ct);
                }
                return copy;
            }
        },
        x);
    mark(log, ev, stage_prefix, "square");
    return out;
}

DensePacked to_dense(const PackedTensor& x, Evaluator& ev) {
    if (const auto* d = std::get_if<DensePacked>(&x)) {
        return *d;
    }
    if (const auto* c = std::get_if<ChannelPacked>(&x)) {
        return packing::combine_to_dense(*c, ev);
    }
    throw std::invalid_argument("Im2Col columns cannot be converted to a dense tensor");
}

ConvPacked to_conv(const PackedTensor& x, const KernelSpec& kernel, Evaluator& ev) {
    if (const auto* c = std::get_if<ConvPacked>(&x)) {
        return *c;
    }
    const bool grouping = kernel.d == 1 && kernel.stride == 1;
    if (const auto* d = std::get_if<DensePacked>(&x)) {
        return grouping ? packing::h_grouping_from_dense(*d, kernel, ev) : packing::h_im2col_from_dense(*d, kernel, ev);
    }
    const auto& ch = std::get<ChannelPacked>(x);
    return grouping ? packing::h_grouping(ch, kernel) : packing::h_im2col_from_conv(ch, kernel, ev);
}

TensorShape packed_shape(const PackedTensor& x) {
    return std::visit(
        [](const auto& v) -> TensorShape {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ConvPacked>) {
                return {v.out_w, v.out_h, v.cols()};
            } else {
                return v.shape;
            }
        },
        x);
}

namespace {

template <typename F>
int max_over(const PackedTensor& x, F f) {
    return std::visit(
        [&](const auto& v) -> int {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, DensePacked>) {
                return f(v.ct);
            } else {
                int best = 0;
                for (const auto& ct : v.cts) {
                    best = std::max(best, f(ct));
                }
                return best;
            }
        },
        x);
}

}  // namespace

int packed_depth(const PackedTensor& x) {
    return max_over(x, [](const SlotCiphertext& ct) { return ct.depth(); });
}

int packed_assembly_depth(const PackedTensor& x) {
    return max_over(x, [](const SlotCiphertext& ct) { return ct.assembly_depth(); });
}

}  // namespace ffconv::engine
