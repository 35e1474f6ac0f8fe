// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <vector>

#include "ffconv/common/error.h"
#include "ffconv/packing/packing.h"
#include "support/gen.h"
#include "support/oracle.h"

namespace ffconv::packing {
namespace {

using ffconv::testing::Gen;
using he::EvalMode;
using he::Evaluator;
using he::SchemeParams;

SchemeParams params(std::size_t n, u128 t = 1000003) {
    SchemeParams p;
    p.slot_count = n;
    p.plain_modulus = t;
    return p;
}

// Im2Col by definition: entry (s, k) with s = oy*O_w + ox and
// k = ch*d*d + dy*d + dx.
IntMatrix oracle_im2col(const Tensor3& x, std::size_t d, std::size_t stride) {
    const TensorShape s = x.shape();
    const std::size_t ow = (s.w - d) / stride + 1;
    const std::size_t oh = (s.h - d) / stride + 1;
    IntMatrix m(ow * oh, d * d * s.c);
    for (std::size_t row = 0; row < ow * oh; ++row) {
        const std::size_t oy = row / ow;
        const std::size_t ox = row % ow;
        for (std::size_t k = 0; k < d * d * s.c; ++k) {
            const std::size_t ch = k / (d * d);
            const std::size_t dy = (k % (d * d)) / d;
            const std::size_t dx = k % d;
            m(row, k) = x.data()[ch * s.w * s.h + (oy * stride + dy) * s.w + ox * stride + dx];
        }
    }
    return m;
}

// Grouping by definition: column ch is channel ch in row-major order.
IntMatrix oracle_grouping(const Tensor3& x) {
    const TensorShape s = x.shape();
    IntMatrix m(s.w * s.h, s.c);
    for (std::size_t ch = 0; ch < s.c; ++ch) {
        for (std::size_t p = 0; p < s.w * s.h; ++p) {
            m(p, ch) = x.data()[ch * s.w * s.h + p];
        }
    }
    return m;
}

void expect_zero_tail(const ConvPacked& c, const Evaluator& ev) {
    for (const auto& ct : c.cts) {
        const auto v = ev.decrypt(ct);
        for (std::size_t s = c.rows(); s < v.size(); ++s) {
            ASSERT_EQ(v[s], 0) << "slot " << s;
        }
    }
}

TEST(DensePack, DegenerateLayout) {
    Evaluator ev(params(8));
    const Tensor3 t({1, 1, 3}, {4, -5, 6});
    const DensePacked x = dense_pack(t, ev);
    EXPECT_EQ(ev.decrypt(x.ct), (std::vector<i128>{4, -5, 6, 0, 0, 0, 0, 0}));
    EXPECT_EQ(dense_unpack(x, ev), t);
}

TEST(DensePack, LayoutIsChannelMajorWidthFastest) {
    Evaluator ev(params(32));
    Tensor3 t({3, 3, 3});
    for (std::size_t i = 0; i < 27; ++i) {
        t.data()[i] = static_cast<i128>(i + 1);
    }
    const auto slots = ev.decrypt(dense_pack(t, ev).ct);
    EXPECT_EQ(slots[2 * 9 + 1 * 3 + 2], t.at(2, 1, 2));
    EXPECT_EQ(slots[26], 27);
    EXPECT_EQ(slots[27], 0);
}

TEST(DensePack, CapacityAndRoundTrip) {
    Evaluator ev(params(16));
    EXPECT_THROW(dense_pack(Tensor3({3, 3, 2}), ev), CapacityError);
    Gen g(3);
    for (int i = 0; i < 50; ++i) {
        const TensorShape s{g.size(1, 4), g.size(1, 2), g.size(1, 2)};
        const Tensor3 t = g.tensor(s, 1000);
        EXPECT_EQ(dense_unpack(dense_pack(t, ev), ev), t);
        EXPECT_EQ(channel_unpack(channel_pack(t, ev), ev), t);
    }
}

TEST(PlainIm2Col, Shapes) {
    const IntMatrix a = plain_im2col(Tensor3({3, 3, 3}), {2, 1, 1});
    EXPECT_EQ(a.rows(), 4u);
    EXPECT_EQ(a.cols(), 12u);
    const IntMatrix b = plain_im2col(Tensor3({28, 28, 1}), {8, 2, 56});
    EXPECT_EQ(b.rows(), 121u);
    EXPECT_EQ(b.cols(), 64u);
    EXPECT_THROW(plain_im2col(Tensor3({3, 3, 1}), {4, 1, 1}), ShapeError);
}

TEST(PlainIm2Col, PointwiseIsReshape) {
    Gen g(4);
    const Tensor3 t = g.tensor({4, 3, 5}, 50);
    EXPECT_EQ(plain_im2col(t, {1, 1, 1}), oracle_grouping(t));
}

TEST(PlainIm2Col, MatchesDefinitionAndConvolution) {
    Gen g(5);
    for (int i = 0; i < 100; ++i) {
        const std::size_t d = g.size(1, 3);
        const std::size_t stride = g.size(1, 2);
        const TensorShape s{g.size(d, 6), g.size(d, 6), g.size(1, 3)};
        const Tensor3 t = g.tensor(s, 20);
        const IntMatrix im = plain_im2col(t, {d, stride, 1});
        ASSERT_EQ(im, oracle_im2col(t, d, stride));
        const IntMatrix w = g.int_matrix(d * d * s.c, 3, 9);
        const IntMatrix z = ffconv::testing::int_matmul(im, w);
        const Tensor3 direct = ffconv::testing::direct_conv_matrix(t, w, d, stride);
        for (std::size_t o = 0; o < 3; ++o) {
            for (std::size_t r = 0; r < im.rows(); ++r) {
                ASSERT_EQ(z(r, o), direct.data()[o * im.rows() + r]);
            }
        }
    }
}

TEST(ConvPack, ColumnsPerCiphertext) {
    Evaluator ev(params(8));
    Gen g(6);
    const IntMatrix im = g.int_matrix(4, 12, 100);
    const ConvPacked c = conv_pack(im, 2, 2, ev);
    EXPECT_EQ(c.cts.size(), 12u);
    expect_zero_tail(c, ev);
    EXPECT_EQ(conv_unpack(c, ev), im);
    const IntMatrix one = g.int_matrix(1, 1, 100);
    EXPECT_EQ(conv_pack(one, ev).cts.size(), 1u);
    EXPECT_EQ(conv_unpack(conv_pack(one, ev), ev), one);
    EXPECT_THROW(conv_pack(g.int_matrix(9, 1, 1), ev), CapacityError);
}

TEST(ConvPack, Replicated) {
    Evaluator ev(params(16));
    const IntMatrix im(2, 2, {1, 2, 3, 4});
    const ConvPacked c = conv_pack_replicated(im, 2, 1, 3, ev);
    EXPECT_EQ(c.replicas, 3u);
    const auto v = ev.decrypt(c.cts[1]);
    EXPECT_EQ((std::vector<i128>(v.begin(), v.begin() + 7)), (std::vector<i128>{2, 4, 2, 4, 2, 4, 0}));
}

TEST(HIm2ColFromDense, FigureExampleCounts) {
    Evaluator ev(params(32));
    Gen g(7);
    const Tensor3 t = g.tensor({3, 3, 3}, 100);
    const ConvPacked c = h_im2col_from_dense(dense_pack(t, ev), {2, 1, 1}, ev);
    EXPECT_EQ(c.cts.size(), 12u);
    EXPECT_EQ(conv_unpack(c, ev), oracle_im2col(t, 2, 1));
    EXPECT_EQ(ev.counters().nominal_rot(), 48u);
    EXPECT_EQ(ev.counters().add_cc, 48u);
    EXPECT_LE(ev.counters().mul_pc, 27u);
    EXPECT_EQ(ev.counters().mul_pc, 27u);
    expect_zero_tail(c, ev);
}

TEST(HIm2ColFromDense, RejectsPointwise) {
    Evaluator ev(params(32));
    EXPECT_THROW(h_im2col_from_dense(dense_pack(Tensor3({3, 3, 3}), ev), {1, 1, 1}, ev), std::invalid_argument);
}

TEST(HIm2ColFromConv, Counts) {
    Evaluator ev(params(32));
    Gen g(8);
    const Tensor3 t = g.tensor({4, 4, 2}, 100);
    const ConvPacked c = h_im2col_from_conv(channel_pack(t, ev), {2, 1, 1}, ev);
    EXPECT_EQ(c.cts.size(), 8u);
    EXPECT_EQ(conv_unpack(c, ev), oracle_im2col(t, 2, 1));
    EXPECT_EQ(ev.counters().nominal_rot(), 72u);
    EXPECT_EQ(ev.counters().add_cc, 72u);
    EXPECT_LE(ev.counters().mul_pc, 32u);

    Evaluator ev3(params(16));
    const ConvPacked c3 = h_im2col_from_conv(channel_pack(g.tensor({3, 3, 3}, 9), ev3), {2, 1, 1}, ev3);
    EXPECT_EQ(c3.cts.size(), 12u);
}

TEST(HGrouping, ZeroOps) {
    Evaluator ev(params(16));
    Gen g(9);
    const Tensor3 t = g.tensor({3, 3, 3}, 100);
    const ChannelPacked x = channel_pack(t, ev);
    const ConvPacked c = h_grouping(x, {1, 1, 1});
    EXPECT_EQ(c.cts.size(), 3u);
    EXPECT_EQ(ev.counters(), he::OpCounters{});
    EXPECT_EQ(conv_unpack(c, ev), oracle_grouping(t));
    EXPECT_EQ(conv_unpack(c, ev), plain_im2col(t, {1, 1, 1}));
    const ConvPacked single = h_grouping(channel_pack(g.tensor({2, 2, 1}, 5), ev), {1, 1, 1});
    EXPECT_EQ(single.cts.size(), 1u);
    EXPECT_THROW(h_grouping(x, {2, 1, 1}), std::invalid_argument);
}

TEST(HGroupingFromDense, Counts) {
    Evaluator ev(params(32));
    Gen g(10);
    const Tensor3 t = g.tensor({3, 3, 3}, 100);
    const ConvPacked c = h_grouping_from_dense(dense_pack(t, ev), {1, 1, 1}, ev);
    EXPECT_EQ(c.cts.size(), 3u);
    EXPECT_EQ(ev.counters().mul_pc, 3u);
    EXPECT_EQ(ev.counters().add_cc, 0u);
    EXPECT_EQ(ev.counters().rot, 2u);
    EXPECT_EQ(ev.counters().nominal_rot(), 3u);
    EXPECT_EQ(conv_unpack(c, ev), oracle_grouping(t));
    expect_zero_tail(c, ev);

    Evaluator one(params(8));
    h_grouping_from_dense(dense_pack(g.tensor({2, 2, 1}, 5), one), {1, 1, 1}, one);
    EXPECT_EQ(one.counters().mul_pc, 1u);
    EXPECT_EQ(one.counters().rot, 0u);
    EXPECT_THROW(h_grouping_from_dense(dense_pack(t, ev), {2, 1, 1}, ev), std::invalid_argument);
}

TEST(Combine, Counts) {
    SchemeParams p = params(16384);
    Evaluator ev(p, EvalMode::kCountOnly);
    std::vector<he::SlotCiphertext> blocks(54, ev.zero());
    combine_to_dense(blocks, std::vector<std::size_t>(54, 144), {144, 1, 54}, ev);
    EXPECT_EQ(ev.counters().rot, 53u);
    EXPECT_EQ(ev.counters().add_cc, 53u);
    ev.reset_counters();
    std::vector<he::SlotCiphertext> channels(163, ev.zero());
    combine_to_dense(channels, std::vector<std::size_t>(163, 25), {5, 5, 163}, ev);
    EXPECT_EQ(ev.counters().rot, 162u);
    EXPECT_EQ(ev.counters().add_cc, 162u);
}

TEST(Combine, SingleInputIsIdentity) {
    Evaluator ev(params(8));
    const Tensor3 t({2, 2, 1}, {1, 2, 3, 4});
    const ChannelPacked x = channel_pack(t, ev);
    const DensePacked d = combine_to_dense(x, ev);
    EXPECT_EQ(dense_unpack(d, ev), t);
    EXPECT_EQ(ev.counters(), he::OpCounters{});
}

TEST(Combine, Errors) {
    Evaluator ev(params(8));
    const auto a = ev.encrypt(std::vector<i128>{1, 2, 3});
    EXPECT_THROW(combine_to_dense({a, a}, {2, 2}, {2, 2, 1}, ev), PreconditionError);
    EXPECT_THROW(combine_to_dense({a, a, a}, {3, 3, 3}, {3, 3, 1}, ev), CapacityError);
}

// Every transition against its plaintext rearrangement on random shapes.
TEST(Property, TransitionsMatchPlaintextOracle) {
    Gen g(20260202);
    int cases = 0;
    for (int trial = 0; trial < 600; ++trial) {
        const std::size_t c = g.size(1, 3);
        const std::size_t w = g.size(1, 5);
        const std::size_t h = g.size(1, 5);
        const TensorShape s{w, h, c};
        const Tensor3 t = g.tensor(s, 500);
        Evaluator ev(params(128));
        const DensePacked dx = dense_pack(t, ev);
        const ChannelPacked cx = channel_pack(t, ev);
        const std::size_t max_d = std::min(w, h);
        switch (trial % 5) {
            case 0:
            case 1: {
                const std::size_t d = g.size(1, max_d);
                const std::size_t stride = d == 1 ? 2 : g.size(1, 2);
                const KernelSpec k{d, stride, 1};
                const IntMatrix expected = oracle_im2col(t, d, stride);
                const std::size_t rows = k.out_w(s) * k.out_h(s);
                ev.reset_counters();
                const ConvPacked a = trial % 5 == 0 ? h_im2col_from_dense(dx, k, ev) : h_im2col_from_conv(cx, k, ev);
                ASSERT_EQ(conv_unpack(a, ev), expected);
                expect_zero_tail(a, ev);
                ASSERT_EQ(ev.counters().nominal_rot(), rows * d * d * c);
                ASSERT_EQ(ev.counters().add_cc, rows * d * d * c);
                ASSERT_LE(ev.counters().mul_pc, s.size());
                ASSERT_EQ(ev.counters().mul_pc, im2col_source_count(s, k));
                break;
            }
            case 2: {
                const ConvPacked a = h_grouping(cx, {1, 1, 1});
                ASSERT_EQ(conv_unpack(a, ev), oracle_grouping(t));
                break;
            }
            case 3: {
                ev.reset_counters();
                const ConvPacked a = h_grouping_from_dense(dx, {1, 1, 1}, ev);
                ASSERT_EQ(conv_unpack(a, ev), oracle_grouping(t));
                ASSERT_EQ(ev.counters().mul_pc, c);
                ASSERT_EQ(ev.counters().nominal_rot(), c);
                break;
            }
            default: {
                ev.reset_counters();
                ASSERT_EQ(dense_unpack(combine_to_dense(cx, ev), ev), t);
                ASSERT_EQ(ev.counters().nominal_rot(), c - 1);
                ASSERT_EQ(ev.counters().add_cc, c - 1);
                break;
            }
        }
        ++cases;
    }
    EXPECT_GE(cases, 500);
}

}  // namespace
}  // namespace ffconv::packing
