// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffconv/runner/runner.h"

#include <algorithm>
#include <sstream>
#include <variant>

#include "ffconv/common/error.h"
#include "ffconv/engine/engine.h"
#include "ffconv/packing/packing.h"

namespace ffconv::runner {

using engine::Assembly;
using engine::StageLog;
using he::EvalMode;
using he::Evaluator;
using packing::ChannelPacked;
using packing::ConvPacked;
using packing::DensePacked;
using packing::PackedTensor;

namespace {

u128 abs128(i128 v) { return static_cast<u128>(v < 0 ? -v : v); }

u128 peak_of(const Tensor3& t) {
    u128 m = 0;
    for (i128 v : t.data()) {
        m = std::max(m, abs128(v));
    }
    return m;
}

std::string label(std::size_t i, const LayerSpec& l) { return "layer " + std::to_string(i) + " (" + l.name + ")"; }

template <typename T>
const T& expect_form(const PackedTensor& x, const std::string& where) {
    const T* p = std::get_if<T>(&x);
    if (p == nullptr) {
        throw std::logic_error(where + ": ciphertext layout does not match the plan");
    }
    return *p;
}

Tensor3 decode(const PackedTensor& x, const Evaluator& ev) {
    if (const auto* d = std::get_if<DensePacked>(&x)) {
        return packing::dense_unpack(*d, ev);
    }
    if (const auto* c = std::get_if<ChannelPacked>(&x)) {
        return packing::channel_unpack(*c, ev);
    }
    throw std::logic_error("Im2Col columns are never a layer output");
}

PackedTensor client_transition(const PlanStep& s, const LayerSpec& l, const Tensor3& input, const Evaluator& ev) {
    const KernelSpec& k = s.transition_kernel;
    switch (s.before) {
        case Transition::kClientDense:
            return packing::dense_pack(input, ev);
        case Transition::kClientIm2col:
            return packing::conv_pack(packing::plain_im2col(input, k), k.out_w(input.shape()), k.out_h(input.shape()),
                                      ev);
        case Transition::kClientIm2colReplicated:
            return packing::conv_pack_replicated(packing::plain_im2col(input, k), k.out_w(input.shape()),
                                                 k.out_h(input.shape()), l.out_channels, ev);
        default:
            break;
    }
    throw std::logic_error("not a client transition");
}

PackedTensor he_transition(const PlanStep& s, const PackedTensor& x, Evaluator& ev, const std::string& where) {
    const KernelSpec& k = s.transition_kernel;
    switch (s.before) {
        case Transition::kHIm2colFromDense:
            return packing::h_im2col_from_dense(expect_form<DensePacked>(x, where), k, ev);
        case Transition::kHIm2colFromConv:
            return packing::h_im2col_from_conv(expect_form<ChannelPacked>(x, where), k, ev);
        case Transition::kHGrouping:
            return packing::h_grouping(expect_form<ChannelPacked>(x, where), k);
        case Transition::kHGroupingFromDense:
            return packing::h_grouping_from_dense(expect_form<DensePacked>(x, where), k, ev);
        case Transition::kCombine:
            return packing::combine_to_dense(expect_form<ChannelPacked>(x, where), ev);
        default:
            break;
    }
    throw std::logic_error("not a homomorphic transition");
}

Tensor3 conv_ref(const Tensor3& in, const IntMatrix& w, std::size_t d, std::size_t stride,
                 const std::vector<i128>* bias) {
    const TensorShape s = in.shape();
    const KernelSpec k{d, stride, w.cols()};
    Tensor3 out(k.output_shape(s));
    for (std::size_t o = 0; o < w.cols(); ++o) {
        for (std::size_t oy = 0; oy < out.shape().h; ++oy) {
            for (std::size_t ox = 0; ox < out.shape().w; ++ox) {
                i128 acc = bias != nullptr ? (*bias)[o] : 0;
                for (std::size_t ch = 0; ch < s.c; ++ch) {
                    for (std::size_t dy = 0; dy < d; ++dy) {
                        for (std::size_t dx = 0; dx < d; ++dx) {
                            acc += in.at(ox * stride + dx, oy * stride + dy, ch) * w(patch_index(dx, dy, ch, d), o);
                        }
                    }
                }
                out.at(ox, oy, o) = acc;
            }
        }
    }
    return out;
}

}  // namespace

std::vector<i128> RunResult::logits() const { return output ? output->data() : std::vector<i128>{}; }

Tensor3 input_from_bytes(const TensorShape& shape, std::string_view bytes) {
    if (bytes.size() != shape.size()) {
        throw ShapeError("input has " + std::to_string(bytes.size()) + " bytes, network expects " + shape.str() +
                         " = " + std::to_string(shape.size()));
    }
    Tensor3 t(shape);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        t.data()[i] = static_cast<unsigned char>(bytes[i]);
    }
    return t;
}

RunResult run_encrypted(const NetworkSpec& net, const NetworkWeights& weights, const Tensor3& input,
                        const RunOptions& options) {
    if (!(input.shape() == net.input_shape)) {
        throw ShapeError("input shape " + input.shape().str() + " differs from the network's " +
                         net.input_shape.str());
    }
    check_weights(net, weights);
    RunResult result;
    result.plan = options.plan ? *options.plan : build_plan(net, options.strategy);
    check_plan(net, result.plan);
    const u128 input_bound = options.input_bound != 0 ? options.input_bound : peak_of(input);
    result.ledger = build_ledger(net, weights, input_bound);
    if (options.mode == EvalMode::kValues) {
        result.ledger.require_fits();
    } else {
        for (const LayerBound& b : result.ledger.layers) {
            if (!b.fits) {
                result.flags.push_back("layer " + std::to_string(b.layer) + " (" + b.name +
                                       "): worst-case magnitude " + to_string(b.bound) + " reaches t/2");
            }
        }
    }

    Evaluator ev(net.scheme.params(), options.mode);
    PackedTensor x;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        const PlanStep& s = result.plan.steps[i];
        const LayerWeights& lw = weights.layers[i];
        const std::string where = label(i, l);
        const std::string prefix = l.name + ".";
        const bool first = i == 0;
        const int depth_before = first ? 0 : engine::packed_depth(x);
        const int asm_before = first ? 0 : engine::packed_assembly_depth(x);
        const he::OpCounters ops_before = ev.counters();

        StageLog log(ev);
        if (s.before != Transition::kNone) {
            x = is_client(s.before) ? client_transition(s, l, input, ev) : he_transition(s, x, ev, where);
            log.mark(ev, prefix + std::string(transition_name(s.before)));
        }

        switch (s.impl) {
            case LayerImpl::kDense:
                if (l.kind == LayerKind::kAvgPool) {
                    x = engine::avg_pool(x, {l.d, l.stride, l.in_shape.c}, ev, &log, prefix);
                } else {
                    x = engine::conv_dense(expect_form<DensePacked>(x, where), lw.w, l.kernel(), Assembly::kDense, ev,
                                           &lw.bias, &log, prefix);
                }
                break;
            case LayerImpl::kConv:
                if (l.kind == LayerKind::kAvgPool) {
                    x = engine::avg_pool(x, {l.d, l.stride, l.in_shape.c}, ev, &log, prefix);
                } else {
                    x = engine::conv_conv(expect_form<ConvPacked>(x, where), lw.w, ev, &lw.bias, &log, prefix);
                }
                break;
            case LayerImpl::kConvReplicated:
                x = engine::conv_conv_replicated(expect_form<ConvPacked>(x, where), lw.w, ev, &lw.bias, &log, prefix);
                break;
            case LayerImpl::kFactorized:
                x = engine::ffconv_layer(x, lw.pair, l.kernel(), s.pattern, ev, &lw.bias, &log, prefix);
                break;
            case LayerImpl::kFc:
                x = engine::fc_dense(expect_form<DensePacked>(x, where), lw.w, lw.bias, ev, s.mask_outputs, &log,
                                     prefix);
                break;
            case LayerImpl::kSquare:
                x = engine::square_layer(x, ev, &log, prefix);
                break;
        }

        LayerRun lr;
        lr.name = l.name;
        lr.stages = log.stages();
        lr.ops = ev.counters() - ops_before;
        lr.depth = engine::packed_depth(x) - depth_before;
        lr.assembly_depth = engine::packed_assembly_depth(x) - asm_before;
        lr.shape = engine::packed_shape(x);
        lr.form = s.out_form;
        if (!(lr.shape == l.out_shape)) {
            throw std::logic_error(where + ": produced " + lr.shape.str() + ", expected " + l.out_shape.str());
        }
        if (ev.tracks_values() && (options.keep_layer_outputs || i + 1 == net.layers.size())) {
            lr.output = decode(x, ev);
        }
        result.layers.push_back(std::move(lr));
    }
    result.total = ev.counters();
    if (!net.layers.empty()) {
        result.depth = engine::packed_depth(x);
        result.assembly_depth = engine::packed_assembly_depth(x);
        result.output = result.layers.back().output;
    }
    return result;
}

ReferenceRun run_reference(const NetworkSpec& net, const NetworkWeights& weights, const Tensor3& input) {
    if (!(input.shape() == net.input_shape)) {
        throw ShapeError("input shape " + input.shape().str() + " differs from the network's " +
                         net.input_shape.str());
    }
    check_weights(net, weights);
    ReferenceRun ref;
    Tensor3 cur = input;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        const LayerWeights& lw = weights.layers[i];
        u128 peak = 0;
        switch (l.kind) {
            case LayerKind::kConv:
                cur = conv_ref(cur, lw.w.entries, l.d, l.stride, &lw.bias.entries);
                break;
            case LayerKind::kFfconv: {
                const Tensor3 mid = conv_ref(cur, lw.pair.w1.entries, l.d, l.stride, nullptr);
                peak = peak_of(mid);
                cur = conv_ref(mid, lw.pair.w2.entries, 1, 1, &lw.bias.entries);
                break;
            }
            case LayerKind::kFc: {
                Tensor3 out({1, 1, l.out_channels});
                for (std::size_t o = 0; o < l.out_channels; ++o) {
                    i128 acc = lw.bias.entries[o];
                    for (std::size_t k = 0; k < cur.data().size(); ++k) {
                        acc += cur.data()[k] * lw.w.entries(k, o);
                    }
                    out.data()[o] = acc;
                }
                cur = std::move(out);
                break;
            }
            case LayerKind::kSquare:
                for (i128& v : cur.data()) {
                    v *= v;
                }
                break;
            case LayerKind::kAvgPool: {
                Tensor3 out(l.out_shape);
                for (std::size_t ch = 0; ch < l.out_shape.c; ++ch) {
                    for (std::size_t oy = 0; oy < l.out_shape.h; ++oy) {
                        for (std::size_t ox = 0; ox < l.out_shape.w; ++ox) {
                            i128 acc = 0;
                            for (std::size_t dy = 0; dy < l.d; ++dy) {
                                for (std::size_t dx = 0; dx < l.d; ++dx) {
                                    acc += cur.at(ox * l.stride + dx, oy * l.stride + dy, ch);
                                }
                            }
                            out.at(ox, oy, ch) = acc;
                        }
                    }
                }
                cur = std::move(out);
                break;
            }
        }
        ref.peaks.push_back(std::max(peak, peak_of(cur)));
        ref.outputs.push_back(cur);
    }
    return ref;
}

VerifyReport verify(const NetworkSpec& net, const NetworkWeights& weights, const Tensor3& input,
                    const RunOptions& options) {
    VerifyReport report;
    auto fail = [&](std::size_t i, const std::string& what) {
        report.failures.push_back(label(i, net.layers[i]) + ": " + what);
        if (!report.first_bad_layer || i < *report.first_bad_layer) {
            report.first_bad_layer = i;
        }
    };

    const ReferenceRun ref = run_reference(net, weights, input);
    RunOptions opts = options;
    opts.mode = EvalMode::kValues;
    opts.keep_layer_outputs = true;
    report.run = run_encrypted(net, weights, input, opts);
    const RunResult& run = report.run;

    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Tensor3& want = ref.outputs[i];
        const Tensor3& got = *run.layers[i].output;
        if (!(got.shape() == want.shape())) {
            fail(i, "output shape " + got.shape().str() + ", reference " + want.shape().str());
            continue;
        }
        for (std::size_t k = 0; k < want.data().size(); ++k) {
            if (got.data()[k] != want.data()[k]) {
                fail(i, "output element " + std::to_string(k) + " is " + to_string(got.data()[k]) +
                            ", reference " + to_string(want.data()[k]));
                break;
            }
        }
        if (ref.peaks[i] > run.ledger.layers[i].bound) {
            fail(i, "observed magnitude " + to_string(ref.peaks[i]) + " exceeds the ledger bound " +
                        to_string(run.ledger.layers[i].bound));
        }
    }

    report.cost = cost::predict_network(net, run.plan);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        report.cost.attach_measured(i, run.layers[i].stages);
        for (const cost::StageCost& s : report.cost.layers[i].stages) {
            if (!s.matches()) {
                std::ostringstream os;
                os << "stage " << s.name << " predicted " << s.predicted << ", measured " << *s.measured;
                fail(i, os.str());
            }
        }
        const cost::LayerCost& lc = report.cost.layers[i];
        if (lc.formula_dot && !(lc.dot_counts() == *lc.formula_dot)) {
            const cost::CostTriple m = lc.dot_counts();
            const cost::CostTriple& f = *lc.formula_dot;
            std::ostringstream os;
            os << "rotate-and-sum counts (" << m.mul_pc << ", " << m.add_cc << ", " << m.rot
               << ") differ from the closed form (" << f.mul_pc << ", " << f.add_cc << ", " << f.rot << ")";
            if (lc.span_divergence) {
                report.warnings.push_back(label(i, net.layers[i]) + ": " + os.str() +
                                          "; the engine sums over the filter footprint");
            } else {
                fail(i, os.str());
            }
        }
    }
    for (const std::string& f : run.flags) {
        report.warnings.push_back(f);
    }
    report.ok = report.failures.empty();
    return report;
}

}  // namespace ffconv::runner
