// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "ffconv/common/error.h"
#include "ffconv/engine/engine.h"
#include "support/gen.h"
#include "support/oracle.h"

namespace ffconv::engine {
namespace {

using ffconv::testing::Gen;
using he::EvalMode;
using he::Evaluator;
using he::OpCounters;
using he::SchemeParams;

constexpr u128 kT = 576460752303439873ULL;

SchemeParams params(std::size_t n) {
    SchemeParams p;
    p.slot_count = n;
    p.plain_modulus = kT;
    return p;
}

Tensor3 decode(const PackedTensor& x, const Evaluator& ev) {
    if (const auto* d = std::get_if<DensePacked>(&x)) {
        return packing::dense_unpack(*d, ev);
    }
    return packing::channel_unpack(std::get<ChannelPacked>(x), ev);
}

WeightMatrix wm(IntMatrix m) { return WeightMatrix{std::move(m), 8, 1.0}; }

int ceil_log2_ref(std::size_t m) {
    int r = 0;
    while ((std::size_t{1} << r) < m) {
        ++r;
    }
    return r;
}

struct ConvCase {
    TensorShape in;
    KernelSpec kernel;
};

ConvCase random_case(Gen& g, std::size_t max_side, std::size_t max_c, std::size_t max_oc) {
    const std::size_t d = g.size(1, 3);
    const TensorShape in{g.size(d, max_side), g.size(d, max_side), g.size(1, max_c)};
    return {in, {d, g.size(1, 2), g.size(1, max_oc)}};
}

TEST(Patterns, NamesRoundTrip) {
    for (Pattern p : kAllPatterns) {
        EXPECT_EQ(parse_pattern(pattern_name(p)), p);
    }
    EXPECT_EQ(parse_pattern("dp-hi2c-cp"), Pattern::kDpHi2cCp);
    EXPECT_THROW(parse_pattern("DP-CP"), std::invalid_argument);
}

TEST(DenseSpan, Footprint) {
    const DenseSpan s = dense_conv_span({14, 14, 83}, {6, 2, 20});
    EXPECT_EQ(s.footprint, 82u * 196 + 5 * 14 + 6);
    EXPECT_EQ(s.log2_span, 14);
    EXPECT_EQ(dense_conv_span({28, 28, 1}, {8, 2, 56}).log2_span, 8);
    EXPECT_EQ(dense_conv_span({5, 5, 3}, {1, 1, 1}).footprint, 51u);
    EXPECT_EQ(dense_conv_span({5, 5, 3}, {2, 2, 3}, true).footprint, 7u);
}

TEST(ConvDense, MatchesOracleAndCounts) {
    Gen g(11);
    for (int trial = 0; trial < 120; ++trial) {
        const ConvCase c = random_case(g, 6, 3, 3);
        const std::size_t k = c.kernel.patch_size(c.in);
        const IntMatrix w = g.int_matrix(k, c.kernel.out_channels, 20);
        const BiasVector b{g.values(c.kernel.out_channels, 100)};
        const Tensor3 x = g.tensor(c.in, 30);
        const Tensor3 expected =
            ffconv::testing::add_channel_bias(ffconv::testing::direct_conv_matrix(x, w, c.kernel.d, c.kernel.stride),
                                              b.entries);
        const Assembly assembly = trial % 2 == 0 ? Assembly::kDense : Assembly::kPerChannel;
        Evaluator ev(params(512));
        const DensePacked dx = packing::dense_pack(x, ev);
        StageLog log(ev);
        const PackedTensor out = conv_dense(dx, wm(w), c.kernel, assembly, ev, &b, &log);
        ASSERT_EQ(decode(out, ev), expected);
        if (assembly == Assembly::kPerChannel) {
            for (const auto& ct : std::get<ChannelPacked>(out).cts) {
                const auto v = ev.decrypt(ct);
                for (std::size_t s = expected.shape().spatial(); s < v.size(); ++s) {
                    ASSERT_EQ(v[s], 0);
                }
            }
        }

        const std::size_t outputs = expected.shape().size();
        const std::size_t oc = c.kernel.out_channels;
        const int r = ceil_log2_ref(dense_conv_span(c.in, c.kernel).footprint);
        ASSERT_EQ(log.stages().size(), 3u);
        const OpCounters dot = log.stages()[0].ops;
        EXPECT_EQ(log.stages()[0].name, "dot");
        EXPECT_EQ(dot.mul_pc, outputs);
        EXPECT_EQ(dot.rot, outputs * r);
        EXPECT_EQ(dot.add_cc, outputs * r);
        const OpCounters asm_ops = log.stages()[1].ops;
        EXPECT_EQ(asm_ops.assembly_mul_pc, outputs);
        EXPECT_EQ(asm_ops.mul_pc, 0u);
        EXPECT_EQ(asm_ops.add_cc, assembly == Assembly::kDense ? outputs - 1 : outputs - oc);
        EXPECT_LE(asm_ops.rot, outputs);
        EXPECT_EQ(log.stages()[2].ops.add_pc, assembly == Assembly::kDense ? 1u : oc);
        EXPECT_EQ(packed_depth(out), 1);
        EXPECT_EQ(packed_assembly_depth(out), 1);
    }
}

TEST(ConvDense, RejectsBadShapes) {
    Evaluator ev(params(64));
    const DensePacked x = packing::dense_pack(Tensor3({4, 4, 1}), ev);
    EXPECT_THROW(conv_dense(x, wm(IntMatrix(3, 1)), {2, 1, 1}, Assembly::kDense, ev), ShapeError);
    EXPECT_THROW(conv_dense(x, wm(IntMatrix(25, 1)), {5, 1, 1}, Assembly::kDense, ev), ShapeError);
    const BiasVector b{{1, 2}};
    EXPECT_THROW(conv_dense(x, wm(IntMatrix(4, 1)), {2, 1, 1}, Assembly::kDense, ev, &b), ShapeError);
    Evaluator small(params(16));
    const DensePacked y = packing::dense_pack(Tensor3({4, 4, 1}), small);
    EXPECT_THROW(conv_dense(y, wm(IntMatrix(1, 2)), {1, 1, 2}, Assembly::kDense, small), CapacityError);
}

TEST(ConvConv, WorkedCounts) {
    // K = 12, O_c = 5: 60 multiplications, 55 additions, no rotations.
    Gen g(12);
    Evaluator ev(params(16));
    const Tensor3 x = g.tensor({3, 3, 3}, 50);
    const packing::ConvPacked cx = packing::conv_pack(packing::plain_im2col(x, {2, 1, 5}), 2, 2, ev);
    const IntMatrix w = g.int_matrix(12, 5, 9);
    ev.reset_counters();
    const ChannelPacked out = conv_conv(cx, wm(w), ev);
    EXPECT_EQ(ev.counters().mul_pc, 60u);
    EXPECT_EQ(ev.counters().add_cc, 55u);
    EXPECT_EQ(ev.counters().nominal_rot(), 0u);
    EXPECT_EQ(packing::channel_unpack(out, ev), ffconv::testing::direct_conv_matrix(x, w, 2, 1));
    EXPECT_EQ(packed_depth(out), 1);
}

TEST(ConvConv, MatchesOracle) {
    Gen g(13);
    for (int trial = 0; trial < 100; ++trial) {
        const ConvCase c = random_case(g, 6, 3, 4);
        const Tensor3 x = g.tensor(c.in, 30);
        const IntMatrix w = g.int_matrix(c.kernel.patch_size(c.in), c.kernel.out_channels, 20);
        const BiasVector b{g.values(c.kernel.out_channels, 100)};
        Evaluator ev(params(64));
        const auto cx = packing::conv_pack(packing::plain_im2col(x, c.kernel), c.kernel.out_w(c.in),
                                           c.kernel.out_h(c.in), ev);
        StageLog log(ev);
        const ChannelPacked out = conv_conv(cx, wm(w), ev, &b, &log);
        ASSERT_EQ(packing::channel_unpack(out, ev),
                  ffconv::testing::add_channel_bias(
                      ffconv::testing::direct_conv_matrix(x, w, c.kernel.d, c.kernel.stride), b.entries));
        ASSERT_EQ(log.stages().size(), 2u);
        EXPECT_EQ(log.stages()[1].name, "bias");
        EXPECT_EQ(log.stages()[1].ops.add_pc, c.kernel.out_channels);
    }
}

TEST(ConvConv, Errors) {
    Evaluator ev(params(16));
    const auto cx = packing::conv_pack(IntMatrix(4, 3), 2, 2, ev);
    EXPECT_THROW(conv_conv(cx, wm(IntMatrix(2, 1)), ev), ShapeError);
    const auto rep = packing::conv_pack_replicated(IntMatrix(4, 3), 2, 2, 2, ev);
    EXPECT_THROW(conv_conv(rep, wm(IntMatrix(3, 2)), ev), std::invalid_argument);
    EXPECT_THROW(conv_conv_replicated(rep, wm(IntMatrix(3, 3)), ev), ShapeError);
}

TEST(ConvConvReplicated, MatchesOracleAndCounts) {
    Gen g(14);
    for (int trial = 0; trial < 60; ++trial) {
        const ConvCase c = random_case(g, 6, 3, 4);
        const Tensor3 x = g.tensor(c.in, 30);
        const std::size_t k = c.kernel.patch_size(c.in);
        const IntMatrix w = g.int_matrix(k, c.kernel.out_channels, 20);
        const BiasVector b{g.values(c.kernel.out_channels, 100)};
        Evaluator ev(params(256));
        const auto cx = packing::conv_pack_replicated(packing::plain_im2col(x, c.kernel), c.kernel.out_w(c.in),
                                                      c.kernel.out_h(c.in), c.kernel.out_channels, ev);
        ev.reset_counters();
        const DensePacked out = conv_conv_replicated(cx, wm(w), ev, &b);
        ASSERT_EQ(packing::dense_unpack(out, ev),
                  ffconv::testing::add_channel_bias(
                      ffconv::testing::direct_conv_matrix(x, w, c.kernel.d, c.kernel.stride), b.entries));
        EXPECT_EQ(ev.counters().mul_pc, k);
        EXPECT_EQ(ev.counters().add_cc, k - 1);
        EXPECT_EQ(ev.counters().nominal_rot(), 0u);
        EXPECT_EQ(ev.counters().add_pc, 1u);
    }
}

// W(x) computed through factors must equal the composite conv with W1 W2.
TEST(FfconvLayer, PatternsAgreeWithComposite) {
    Gen g(15);
    for (int trial = 0; trial < 80; ++trial) {
        const ConvCase c = random_case(g, 6, 3, 4);
        const std::size_t rank = g.size(1, 3);
        const std::size_t k = c.kernel.patch_size(c.in);
        const QuantizedPair pair{wm(g.int_matrix(k, rank, 10)), wm(g.int_matrix(rank, c.kernel.out_channels, 10))};
        const BiasVector b{g.values(c.kernel.out_channels, 100)};
        const Tensor3 x = g.tensor(c.in, 30);
        const IntMatrix composite = ffconv::testing::int_matmul(pair.w1.entries, pair.w2.entries);
        const Tensor3 expected = ffconv::testing::add_channel_bias(
            ffconv::testing::direct_conv_matrix(x, composite, c.kernel.d, c.kernel.stride), b.entries);
        for (Pattern p : kAllPatterns) {
            Evaluator ev(params(512));
            const PackedTensor in =
                g.coin() ? PackedTensor{packing::dense_pack(x, ev)} : PackedTensor{packing::channel_pack(x, ev)};
            StageLog log(ev);
            const PackedTensor out = ffconv_layer(in, pair, c.kernel, p, ev, &b, &log);
            ASSERT_EQ(decode(out, ev), expected) << pattern_name(p);
            EXPECT_EQ(packed_depth(out), 2) << pattern_name(p);
            ASSERT_FALSE(log.stages().empty());
            EXPECT_EQ(log.stages().front().name, "input");
            EXPECT_EQ(log.stages().back().name, "w2.bias");
        }
    }
}

TEST(FfconvLayer, FullRankFactorIsIdentity) {
    Gen g(16);
    const TensorShape in{5, 5, 2};
    const KernelSpec kernel{2, 1, 3};
    const IntMatrix w = g.int_matrix(8, 3, 20);
    IntMatrix eye(3, 3);
    for (std::size_t i = 0; i < 3; ++i) {
        eye(i, i) = 1;
    }
    const QuantizedPair pair{wm(w), wm(eye)};
    const Tensor3 x = g.tensor(in, 30);
    const Tensor3 expected = ffconv::testing::direct_conv_matrix(x, w, 2, 1);
    for (Pattern p : kAllPatterns) {
        Evaluator ev(params(256));
        const PackedTensor out = ffconv_layer(packing::dense_pack(x, ev), pair, kernel, p, ev);
        EXPECT_EQ(decode(out, ev), expected) << pattern_name(p);
    }
}

TEST(FfconvLayer, StageSequences) {
    Gen g(17);
    const TensorShape in{6, 6, 2};
    const KernelSpec kernel{2, 2, 3};
    const QuantizedPair pair{wm(g.int_matrix(8, 2, 5)), wm(g.int_matrix(2, 3, 5))};
    const BiasVector b{{1, 2, 3}};
    auto names = [&](Pattern p) {
        Evaluator ev(params(256));
        StageLog log(ev);
        ffconv_layer(packing::dense_pack(Tensor3(in), ev), pair, kernel, p, ev, &b, &log, "L1.");
        std::vector<std::string> out;
        for (const Stage& s : log.stages()) {
            out.push_back(s.name);
        }
        return out;
    };
    using V = std::vector<std::string>;
    EXPECT_EQ(names(Pattern::kDpHi2cCp),
              (V{"L1.input", "L1.w1.dot", "L1.w1.assembly", "L1.grouping", "L1.w2.conv", "L1.w2.bias"}));
    EXPECT_EQ(names(Pattern::kCpHi2cCp), (V{"L1.input", "L1.w1.conv", "L1.grouping", "L1.w2.conv", "L1.w2.bias"}));
    EXPECT_EQ(names(Pattern::kCpHi2cDp),
              (V{"L1.input", "L1.w1.conv", "L1.combine", "L1.w2.dot", "L1.w2.assembly", "L1.w2.bias"}));
    EXPECT_EQ(names(Pattern::kDpDp), (V{"L1.input", "L1.w1.dot", "L1.w1.assembly", "L1.w2.dot", "L1.w2.assembly",
                                        "L1.w2.bias"}));
}

TEST(FfconvLayer, ConvInputCountsMatchClosedForm) {
    // From Im2Col columns: mul r(K + O_c), add r(K + O_c) - r - O_c, rot 0.
    Gen g(18);
    for (int trial = 0; trial < 30; ++trial) {
        const ConvCase c = random_case(g, 6, 3, 5);
        const std::size_t rank = g.size(1, 4);
        const std::size_t k = c.kernel.patch_size(c.in);
        const std::size_t oc = c.kernel.out_channels;
        const QuantizedPair pair{wm(g.int_matrix(k, rank, 5)), wm(g.int_matrix(rank, oc, 5))};
        Evaluator ev(params(128), EvalMode::kCountOnly);
        const auto cx = packing::conv_pack(IntMatrix(c.kernel.out_w(c.in) * c.kernel.out_h(c.in), k),
                                           c.kernel.out_w(c.in), c.kernel.out_h(c.in), ev);
        ffconv_layer(cx, pair, c.kernel, Pattern::kCpHi2cCp, ev);
        EXPECT_EQ(ev.counters().mul_pc, rank * (k + oc));
        EXPECT_EQ(ev.counters().add_cc, rank * (k + oc) - rank - oc);
        EXPECT_EQ(ev.counters().nominal_rot(), 0u);
    }
}

TEST(FfconvLayer, Errors) {
    Evaluator ev(params(64));
    const QuantizedPair bad{wm(IntMatrix(4, 2)), wm(IntMatrix(3, 2))};
    const DensePacked x = packing::dense_pack(Tensor3({3, 3, 1}), ev);
    EXPECT_THROW(ffconv_layer(x, bad, {2, 1, 2}, Pattern::kDpDp, ev), ShapeError);
    const QuantizedPair ok{wm(IntMatrix(4, 2)), wm(IntMatrix(2, 2))};
    const auto cx = packing::conv_pack(IntMatrix(4, 4), 2, 2, ev);
    EXPECT_THROW(ffconv_layer(cx, ok, {2, 1, 2}, Pattern::kDpHi2cCp, ev), std::invalid_argument);
}

TEST(FcDense, MatchesOracle) {
    Gen g(19);
    for (int trial = 0; trial < 60; ++trial) {
        const TensorShape in{g.size(1, 4), g.size(1, 4), g.size(1, 3)};
        const std::size_t outs = g.size(1, 6);
        const Tensor3 x = g.tensor(in, 30);
        const IntMatrix w = g.int_matrix(in.size(), outs, 20);
        const BiasVector b{g.values(outs, 100)};
        const bool mask = g.coin();
        Evaluator ev(params(64));
        StageLog log(ev);
        const ChannelPacked out = fc_dense(packing::dense_pack(x, ev), wm(w), b, ev, mask, &log);
        const auto expected = ffconv::testing::matvec(x.data(), w, b.entries);
        ASSERT_EQ(out.shape, (TensorShape{1, 1, outs}));
        for (std::size_t o = 0; o < outs; ++o) {
            const auto v = ev.decrypt(out.cts[o]);
            ASSERT_EQ(v[0], expected[o]);
            if (mask) {
                for (std::size_t s = 1; s < v.size(); ++s) {
                    ASSERT_EQ(v[s], 0);
                }
            }
        }
        EXPECT_EQ(log.stages()[0].ops.mul_pc, outs);
        EXPECT_EQ(log.stages()[0].ops.rot, outs * ceil_log2_ref(in.size()));
        if (mask) {
            // Masked outputs combine into a dense vector.
            ASSERT_EQ(packing::dense_unpack(packing::combine_to_dense(out, ev), ev).data(), expected);
        }
    }
}

TEST(AvgPool, SumPoolOnEveryLayout) {
    Gen g(20);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t d = g.size(1, 3);
        const std::size_t stride = g.size(1, 3);
        const TensorShape in{g.size(d, 6), g.size(d, 6), g.size(1, 3)};
        const Tensor3 x = g.tensor(in, 50);
        Evaluator ev(params(256));
        const bool dense = trial % 2 == 0;
        const PackedTensor px =
            dense ? PackedTensor{packing::dense_pack(x, ev)} : PackedTensor{packing::channel_pack(x, ev)};
        const PackedTensor out = avg_pool(px, {d, stride, 0}, ev);
        ASSERT_EQ(decode(out, ev), ffconv::testing::sum_pool(x, d, stride));
        EXPECT_EQ(std::holds_alternative<DensePacked>(out), dense);
    }
}

TEST(Square, Depth) {
    Evaluator ev(params(16));
    const Tensor3 x({2, 2, 1}, {1, -2, 3, -4});
    StageLog log(ev);
    const PackedTensor out = square_layer(packing::dense_pack(x, ev), ev, &log);
    EXPECT_EQ(decode(out, ev), Tensor3({2, 2, 1}, {1, 4, 9, 16}));
    EXPECT_EQ(packed_depth(out), 1);
    EXPECT_EQ(log.stages()[0].name, "square");
    EXPECT_EQ(log.stages()[0].ops.mul_cc, 1u);
}

TEST(Conversions, ToDenseAndToConv) {
    Gen g(21);
    const Tensor3 x = g.tensor({4, 4, 2}, 20);
    Evaluator ev(params(64));
    EXPECT_EQ(packing::dense_unpack(to_dense(packing::channel_pack(x, ev), ev), ev), x);
    const auto cx = to_conv(packing::dense_pack(x, ev), {2, 2, 1}, ev);
    EXPECT_EQ(packing::conv_unpack(cx, ev), packing::plain_im2col(x, {2, 2, 1}));
    EXPECT_THROW(to_dense(cx, ev), std::invalid_argument);
    EXPECT_EQ(packed_shape(cx), (TensorShape{2, 2, 8}));
}

// Count-only evaluation charges exactly what value-carrying evaluation does.
TEST(Property, CountOnlyMatchesValues) {
    Gen g(22);
    for (int trial = 0; trial < 40; ++trial) {
        const ConvCase c = random_case(g, 6, 3, 3);
        const std::size_t rank = g.size(1, 3);
        const std::size_t k = c.kernel.patch_size(c.in);
        const QuantizedPair pair{wm(g.int_matrix(k, rank, 5)), wm(g.int_matrix(rank, c.kernel.out_channels, 5))};
        const BiasVector b{g.values(c.kernel.out_channels, 5)};
        const Pattern p = g.pick(std::vector<Pattern>(std::begin(kAllPatterns), std::end(kAllPatterns)));
        const Tensor3 x = g.tensor(c.in, 5);
        auto run = [&](EvalMode mode) {
            Evaluator ev(params(256), mode);
            ffconv_layer(packing::dense_pack(x, ev), pair, c.kernel, p, ev, &b);
            return ev.counters();
        };
        ASSERT_EQ(run(EvalMode::kValues), run(EvalMode::kCountOnly)) << pattern_name(p);
    }
}

}  // namespace
}  // namespace ffconv::engine
