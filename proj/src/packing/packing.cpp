// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffconv/packing/packing.h"

#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

#include "ffconv/common/error.h"

namespace ffconv::packing {

using he::Evaluator;
using he::MaskUse;
using he::PlainVector;
using he::SlotCiphertext;

namespace {

// Count-only evaluators never read plaintext contents.
PlainVector band_mask(std::size_t begin, std::size_t end, const Evaluator& ev) {
    if (!ev.tracks_values()) {
        return PlainVector::constant(0, ev.params());
    }
    return PlainVector::indicator(begin, end, ev.params());
}

void require_capacity(std::size_t needed, const Evaluator& ev, const char* what) {
    if (needed > ev.params().slot_count) {
        throw CapacityError(std::string(what) + " needs " + std::to_string(needed) + " slots but N=" +
                            std::to_string(ev.params().slot_count));
    }
}

std::int64_t signed_shift(std::size_t from, std::size_t to) {
    return static_cast<std::int64_t>(from) - static_cast<std::int64_t>(to);
}

void require_im2col_kernel(const TensorShape& in, const KernelSpec& kernel) {
    kernel.validate(in);
    if (kernel.d == 1 && kernel.stride == 1) {
        throw std::invalid_argument("homomorphic Im2Col of a 1x1 stride-1 kernel is a grouping; use h_grouping");
    }
}

void require_grouping_kernel(const KernelSpec& kernel) {
    if (kernel.d != 1 || kernel.stride != 1) {
        throw std::invalid_argument("grouping needs a 1x1 kernel with stride 1");
    }
}

// Shared body of both Im2Col transitions. source(ch, y, x) returns the
// ciphertext index and slot of an input element.
template <typename Source>
ConvPacked h_im2col(const std::vector<SlotCiphertext>& inputs, const TensorShape& in, const KernelSpec& kernel,
                    Evaluator& ev, Source source) {
    require_im2col_kernel(in, kernel);
    const std::size_t ow = kernel.out_w(in);
    const std::size_t oh = kernel.out_h(in);
    const std::size_t d = kernel.d;
    const std::size_t rows = ow * oh;
    const std::size_t cols = kernel.patch_size(in);
    require_capacity(rows, ev, "Im2Col column");

    // Masked copy of every source element that some patch reads.
    std::map<std::pair<std::size_t, std::size_t>, SlotCiphertext> masked;
    auto isolated = [&](std::size_t ct, std::size_t slot) -> const SlotCiphertext& {
        auto it = masked.find({ct, slot});
        if (it == masked.end()) {
            it = masked.emplace(std::make_pair(ct, slot),
                                ev.mul_mask(inputs[ct], band_mask(slot, slot + 1, ev), MaskUse::kTransition))
                     .first;
        }
        return it->second;
    };

    ConvPacked out;
    out.out_w = ow;
    out.out_h = oh;
    out.cts.reserve(cols);
    for (std::size_t ch = 0; ch < in.c; ++ch) {
        for (std::size_t dy = 0; dy < d; ++dy) {
            for (std::size_t dx = 0; dx < d; ++dx) {
                SlotCiphertext acc = ev.zero();
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        const auto [ct, slot] = source(ch, oy * kernel.stride + dy, ox * kernel.stride + dx);
                        const std::size_t dest = oy * ow + ox;
                        acc = ev.add_cc(acc, ev.rotate_by(isolated(ct, slot), signed_shift(slot, dest)));
                    }
                }
                out.cts.push_back(std::move(acc));
            }
        }
    }
    return out;
}

}  // namespace

DensePacked dense_pack(const Tensor3& tensor, const Evaluator& ev) {
    require_capacity(tensor.shape().size(), ev, "dense packing");
    return {ev.encrypt(tensor.data()), tensor.shape()};
}

Tensor3 dense_unpack(const DensePacked& x, const Evaluator& ev) {
    const std::vector<i128> slots = ev.decrypt(x.ct);
    require_capacity(x.shape.size(), ev, "dense unpacking");
    return Tensor3(x.shape, std::vector<i128>(slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(x.shape.size())));
}

ChannelPacked channel_pack(const Tensor3& tensor, const Evaluator& ev) {
    const TensorShape& s = tensor.shape();
    require_capacity(s.spatial(), ev, "channel packing");
    ChannelPacked out;
    out.shape = s;
    for (std::size_t ch = 0; ch < s.c; ++ch) {
        const auto first = tensor.data().begin() + static_cast<std::ptrdiff_t>(ch * s.spatial());
        const std::vector<i128> plane(first, first + static_cast<std::ptrdiff_t>(s.spatial()));
        out.cts.push_back(ev.encrypt(plane));
    }
    return out;
}

Tensor3 channel_unpack(const ChannelPacked& x, const Evaluator& ev) {
    if (x.cts.size() != x.shape.c) {
        throw ShapeError("channel count does not match ciphertext count");
    }
    Tensor3 out(x.shape);
    for (std::size_t ch = 0; ch < x.shape.c; ++ch) {
        const std::vector<i128> slots = ev.decrypt(x.cts[ch]);
        std::copy(slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(x.shape.spatial()),
                  out.data().begin() + static_cast<std::ptrdiff_t>(ch * x.shape.spatial()));
    }
    return out;
}

IntMatrix plain_im2col(const Tensor3& tensor, const KernelSpec& kernel) {
    const TensorShape& in = tensor.shape();
    kernel.validate(in);
    const std::size_t ow = kernel.out_w(in);
    const std::size_t oh = kernel.out_h(in);
    const std::size_t d = kernel.d;
    IntMatrix im(ow * oh, kernel.patch_size(in));
    for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::size_t row = oy * ow + ox;
            for (std::size_t ch = 0; ch < in.c; ++ch) {
                for (std::size_t dy = 0; dy < d; ++dy) {
                    for (std::size_t dx = 0; dx < d; ++dx) {
                        im(row, patch_index(dx, dy, ch, d)) =
                            tensor.at(ox * kernel.stride + dx, oy * kernel.stride + dy, ch);
                    }
                }
            }
        }
    }
    return im;
}

ConvPacked conv_pack(const IntMatrix& im, std::size_t out_w, std::size_t out_h, const Evaluator& ev) {
    if (out_w * out_h != im.rows()) {
        throw ShapeError("output grid does not match Im2Col row count");
    }
    require_capacity(im.rows(), ev, "conv packing");
    ConvPacked out;
    out.out_w = out_w;
    out.out_h = out_h;
    std::vector<i128> column(im.rows());
    for (std::size_t k = 0; k < im.cols(); ++k) {
        for (std::size_t s = 0; s < im.rows(); ++s) {
            column[s] = im(s, k);
        }
        out.cts.push_back(ev.encrypt(column));
    }
    return out;
}

ConvPacked conv_pack_replicated(const IntMatrix& im, std::size_t out_w, std::size_t out_h, std::size_t replicas,
                                const Evaluator& ev) {
    if (out_w * out_h != im.rows()) {
        throw ShapeError("output grid does not match Im2Col row count");
    }
    if (replicas < 1) {
        throw std::invalid_argument("replica count must be >= 1");
    }
    require_capacity(im.rows() * replicas, ev, "replicated conv packing");
    ConvPacked out;
    out.out_w = out_w;
    out.out_h = out_h;
    out.replicas = replicas;
    std::vector<i128> column(im.rows() * replicas);
    for (std::size_t k = 0; k < im.cols(); ++k) {
        for (std::size_t r = 0; r < replicas; ++r) {
            for (std::size_t s = 0; s < im.rows(); ++s) {
                column[r * im.rows() + s] = im(s, k);
            }
        }
        out.cts.push_back(ev.encrypt(column));
    }
    return out;
}

ConvPacked conv_pack(const IntMatrix& im, const Evaluator& ev) { return conv_pack(im, im.rows(), 1, ev); }

IntMatrix conv_unpack(const ConvPacked& x, const Evaluator& ev) {
    IntMatrix im(x.rows(), x.cols());
    for (std::size_t k = 0; k < x.cols(); ++k) {
        const std::vector<i128> slots = ev.decrypt(x.cts[k]);
        for (std::size_t s = 0; s < x.rows(); ++s) {
            im(s, k) = slots[s];
        }
    }
    return im;
}

ConvPacked h_im2col_from_dense(const DensePacked& x, const KernelSpec& kernel, Evaluator& ev) {
    const TensorShape in = x.shape;
    return h_im2col({x.ct}, in, kernel, ev, [&](std::size_t ch, std::size_t y, std::size_t xx) {
        return std::pair<std::size_t, std::size_t>{0, ch * in.spatial() + y * in.w + xx};
    });
}

ConvPacked h_im2col_from_conv(const ChannelPacked& x, const KernelSpec& kernel, Evaluator& ev) {
    if (x.cts.size() != x.shape.c) {
        throw ShapeError("expected one ciphertext per input channel, got " + std::to_string(x.cts.size()) + " for " +
                         x.shape.str());
    }
    const TensorShape in = x.shape;
    return h_im2col(x.cts, in, kernel, ev, [&](std::size_t ch, std::size_t y, std::size_t xx) {
        return std::pair<std::size_t, std::size_t>{ch, y * in.w + xx};
    });
}

ConvPacked h_grouping(const ChannelPacked& x, const KernelSpec& kernel) {
    require_grouping_kernel(kernel);
    if (x.cts.size() != x.shape.c) {
        throw ShapeError("expected one ciphertext per input channel");
    }
    return ConvPacked{x.cts, x.shape.w, x.shape.h, 1};
}

ConvPacked h_grouping_from_dense(const DensePacked& x, const KernelSpec& kernel, Evaluator& ev) {
    require_grouping_kernel(kernel);
    const std::size_t plane = x.shape.spatial();
    ConvPacked out;
    out.out_w = x.shape.w;
    out.out_h = x.shape.h;
    for (std::size_t ch = 0; ch < x.shape.c; ++ch) {
        const std::size_t begin = ch * plane;
        SlotCiphertext band = ev.mul_mask(x.ct, band_mask(begin, begin + plane, ev), MaskUse::kTransition);
        out.cts.push_back(ev.rotate(band, begin));
    }
    return out;
}

DensePacked combine_to_dense(const std::vector<SlotCiphertext>& xs, const std::vector<std::size_t>& lengths,
                             const TensorShape& shape, Evaluator& ev) {
    if (xs.empty() || xs.size() != lengths.size()) {
        throw std::invalid_argument("combine needs one payload length per ciphertext");
    }
    const std::size_t total = std::accumulate(lengths.begin(), lengths.end(), std::size_t{0});
    require_capacity(total, ev, "combined dense vector");
    if (total != shape.size()) {
        throw ShapeError("combined payload " + std::to_string(total) + " does not match shape " + shape.str());
    }
    if (ev.tracks_values()) {
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const auto slots = xs[i].slots();
            for (std::size_t s = lengths[i]; s < slots.size(); ++s) {
                if (slots[s] != 0) {
                    throw PreconditionError("combine: payload " + std::to_string(i) + " has a nonzero slot " +
                                            std::to_string(s) + " past its length " + std::to_string(lengths[i]));
                }
            }
        }
    }
    SlotCiphertext acc = xs[0];
    std::size_t offset = lengths[0];
    for (std::size_t i = 1; i < xs.size(); ++i) {
        acc = ev.add_cc(acc, ev.rotate_by(xs[i], -static_cast<std::int64_t>(offset)));
        offset += lengths[i];
    }
    return {acc, shape};
}

DensePacked combine_to_dense(const ChannelPacked& x, Evaluator& ev) {
    if (x.cts.size() != x.shape.c) {
        throw ShapeError("expected one ciphertext per channel");
    }
    return combine_to_dense(x.cts, std::vector<std::size_t>(x.cts.size(), x.shape.spatial()), x.shape, ev);
}

std::size_t im2col_source_count(const TensorShape& in, const KernelSpec& kernel) {
    kernel.validate(in);
    std::set<std::size_t> xs;
    std::set<std::size_t> ys;
    for (std::size_t o = 0; o < kernel.out_w(in); ++o) {
        for (std::size_t k = 0; k < kernel.d; ++k) {
            xs.insert(o * kernel.stride + k);
        }
    }
    for (std::size_t o = 0; o < kernel.out_h(in); ++o) {
        for (std::size_t k = 0; k < kernel.d; ++k) {
            ys.insert(o * kernel.stride + k);
        }
    }
    return xs.size() * ys.size() * in.c;
}

}  // namespace ffconv::packing
