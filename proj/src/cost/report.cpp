// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffconv/cost/report.h"

#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace ffconv::cost {

using engine::Pattern;
using he::OpCounters;
using runner::Form;
using runner::LayerImpl;
using runner::LayerKind;
using runner::LayerSpec;
using runner::Transition;

namespace {

Layout layout_of(Form f) {
    switch (f) {
        case Form::kDense:
            return Layout::kDense;
        case Form::kChannel:
            return Layout::kChannel;
        case Form::kConv:
            return Layout::kColumns;
        case Form::kPlain:
            break;
    }
    throw std::logic_error("a layer never reads plaintext input");
}

bool ends_with(const std::string& s, std::string_view tail) {
    return s.size() >= tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0;
}

// Dense rotate-and-sum stages of a step: (input, kernel, depthwise).
struct DenseUse {
    TensorShape in;
    KernelSpec kernel;
    bool depthwise;
};

std::vector<DenseUse> dense_uses(const LayerSpec& l, const runner::PlanStep& s) {
    std::vector<DenseUse> uses;
    if (s.impl == LayerImpl::kDense) {
        if (l.kind == LayerKind::kAvgPool) {
            uses.push_back({l.in_shape, {l.d, l.stride, l.in_shape.c}, true});
        } else {
            uses.push_back({l.in_shape, l.kernel(), false});
        }
    } else if (s.impl == LayerImpl::kFactorized) {
        const KernelSpec k1{l.d, l.stride, l.rank};
        if (s.pattern == Pattern::kDpHi2cCp || s.pattern == Pattern::kDpDp) {
            uses.push_back({l.in_shape, k1, false});
        }
        if (s.pattern == Pattern::kCpHi2cDp || s.pattern == Pattern::kDpDp) {
            uses.push_back({k1.output_shape(l.in_shape), {1, 1, l.out_channels}, false});
        }
    }
    return uses;
}

std::string fmt_counters(const OpCounters& c) {
    std::ostringstream os;
    os << std::right << std::setw(9) << c.mul_pc << std::setw(9) << c.add_cc << std::setw(8) << c.rot
       << std::setw(7) << c.rot_elided << std::setw(7) << c.mul_cc << std::setw(8) << c.assembly_mul_pc
       << std::setw(7) << c.add_pc;
    return os.str();
}

}  // namespace

nlohmann::ordered_json counters_json(const OpCounters& c) {
    nlohmann::ordered_json j;
    j["mul_pc"] = c.mul_pc;
    j["add_cc"] = c.add_cc;
    j["rot"] = c.rot;
    j["rot_elided"] = c.rot_elided;
    j["mul_cc"] = c.mul_cc;
    j["assembly_mul_pc"] = c.assembly_mul_pc;
    j["add_pc"] = c.add_pc;
    return j;
}

OpCounters LayerCost::predicted() const {
    OpCounters sum;
    for (const StageCost& s : stages) {
        sum += s.predicted;
    }
    return sum;
}

std::optional<OpCounters> LayerCost::measured() const {
    OpCounters sum;
    for (const StageCost& s : stages) {
        if (!s.measured) {
            return std::nullopt;
        }
        sum += *s.measured;
    }
    return sum;
}

CostTriple LayerCost::dot_counts() const {
    CostTriple sum;
    for (const StageCost& s : stages) {
        if (ends_with(s.name, "dot")) {
            sum += CostTriple::of(s.measured.value_or(s.predicted));
        }
    }
    return sum;
}

OpCounters CostReport::predicted_total() const {
    OpCounters sum;
    for (const LayerCost& l : layers) {
        sum += l.predicted();
    }
    return sum;
}

std::optional<OpCounters> CostReport::measured_total() const {
    OpCounters sum;
    for (const LayerCost& l : layers) {
        const auto m = l.measured();
        if (!m) {
            return std::nullopt;
        }
        sum += *m;
    }
    return sum;
}

std::vector<std::string> CostReport::mismatches() const {
    std::vector<std::string> out;
    for (const LayerCost& l : layers) {
        for (const StageCost& s : l.stages) {
            if (!s.matches()) {
                out.push_back(s.name);
            }
        }
    }
    return out;
}

const StageCost* CostReport::find_stage(const std::string& name) const {
    for (const LayerCost& l : layers) {
        for (const StageCost& s : l.stages) {
            if (s.name == name) {
                return &s;
            }
        }
    }
    return nullptr;
}

void CostReport::attach_measured(std::size_t layer, const Stages& measured) {
    LayerCost& l = layers.at(layer);
    for (const engine::Stage& m : measured) {
        bool found = false;
        for (StageCost& s : l.stages) {
            if (s.name == m.name && !s.measured) {
                s.measured = m.ops;
                found = true;
                break;
            }
        }
        if (!found) {
            l.stages.push_back({m.name, {}, m.ops});
        }
    }
    for (StageCost& s : l.stages) {
        if (!s.measured) {
            s.measured = OpCounters{};
        }
    }
}

std::string CostReport::table() const {
    std::ostringstream os;
    os << "strategy " << strategy << ", rotation weight " << rotation_weight << "\n";
    os << std::left << std::setw(30) << "stage" << std::right << std::setw(9) << "mul_pc" << std::setw(9) << "add_cc"
       << std::setw(8) << "rot" << std::setw(7) << "elided" << std::setw(7) << "mul_cc" << std::setw(8) << "asm_pc"
       << std::setw(7) << "add_pc"
       << "  check\n";
    for (const LayerCost& l : layers) {
        os << "# " << l.layer << " (" << l.kind << ", " << l.label << ")";
        for (const std::string& f : l.flags) {
            os << " [" << f << "]";
        }
        os << "\n";
        for (const StageCost& s : l.stages) {
            os << std::left << std::setw(30) << s.name << fmt_counters(s.predicted) << "  "
               << (!s.measured ? "-" : s.matches() ? "ok" : "MISMATCH") << "\n";
            if (s.measured && !s.matches()) {
                os << std::left << std::setw(30) << "  measured" << fmt_counters(*s.measured) << "\n";
            }
        }
    }
    const OpCounters total = predicted_total();
    os << std::left << std::setw(30) << "total" << fmt_counters(total) << "\n";
    os << "weighted cost " << CostTriple::of(total).weighted(rotation_weight) << "\n";
    return os.str();
}

std::string CostReport::jsonl() const {
    std::string out;
    for (const LayerCost& l : layers) {
        nlohmann::ordered_json j;
        j["type"] = "layer";
        j["index"] = l.index;
        j["layer"] = l.layer;
        j["kind"] = l.kind;
        j["scheme"] = l.label;
        j["predicted"] = counters_json(l.predicted());
        const auto m = l.measured();
        j["measured"] = m ? counters_json(*m) : nlohmann::ordered_json();
        nlohmann::ordered_json stages = nlohmann::ordered_json::array();
        for (const StageCost& s : l.stages) {
            nlohmann::ordered_json sj;
            sj["name"] = s.name;
            sj["predicted"] = counters_json(s.predicted);
            sj["measured"] = s.measured ? counters_json(*s.measured) : nlohmann::ordered_json();
            stages.push_back(sj);
        }
        j["stages"] = stages;
        if (l.formula_dot) {
            j["formula_dot"] = {{"mul_pc", l.formula_dot->mul_pc},
                                {"add_cc", l.formula_dot->add_cc},
                                {"rot", l.formula_dot->rot}};
        }
        j["flags"] = l.flags;
        out += j.dump() + "\n";
    }
    nlohmann::ordered_json t;
    t["type"] = "total";
    const OpCounters total = predicted_total();
    t["predicted"] = counters_json(total);
    const auto m = measured_total();
    t["measured"] = m ? counters_json(*m) : nlohmann::ordered_json();
    t["weighted"] = CostTriple::of(m.value_or(total)).weighted(rotation_weight);
    t["mismatches"] = mismatches();
    out += t.dump() + "\n";
    return out;
}

Stages predict_step(const runner::NetworkSpec& net, const runner::PackingPlan& plan, std::size_t i) {
    const LayerSpec& l = net.layers.at(i);
    const runner::PlanStep& s = plan.steps.at(i);
    const std::string prefix = l.name + ".";
    const std::size_t n = net.scheme.slot_count;
    const TensorShape& in = l.in_shape;

    Stages out;
    if (s.before != Transition::kNone) {
        OpCounters t;
        switch (s.before) {
            case Transition::kHIm2colFromDense:
                t = h_im2col_ops(in, s.transition_kernel, Layout::kDense);
                break;
            case Transition::kHIm2colFromConv:
                t = h_im2col_ops(in, s.transition_kernel, Layout::kChannel);
                break;
            case Transition::kHGroupingFromDense:
                t = h_grouping_from_dense_ops(in.c);
                break;
            case Transition::kCombine:
                t = combine_ops(in.c);
                break;
            default:
                break;
        }
        out.push_back({prefix + std::string(runner::transition_name(s.before)), t});
    }

    Stages layer;
    const KernelSpec window{l.d, l.stride, in.c};
    switch (s.impl) {
        case LayerImpl::kDense:
            layer = l.kind == LayerKind::kAvgPool ? avg_pool_stages(in, Layout::kDense, window, n, prefix)
                                                  : conv_dense_stages(in, l.kernel(), engine::Assembly::kDense, true,
                                                                      n, prefix);
            break;
        case LayerImpl::kConv:
            layer = l.kind == LayerKind::kAvgPool
                        ? avg_pool_stages(in, Layout::kColumns, window, n, prefix)
                        : conv_conv_stages(l.kernel().patch_size(in), l.out_channels, true, prefix);
            break;
        case LayerImpl::kConvReplicated:
            layer = conv_conv_replicated_stages(l.kernel().patch_size(in), true, prefix);
            break;
        case LayerImpl::kFactorized:
            layer = ffconv_stages(in, layout_of(s.in_form), l.kernel(), l.rank, s.pattern, true, n, prefix);
            break;
        case LayerImpl::kFc:
            layer = fc_stages(in.size(), l.out_channels, s.mask_outputs, true, prefix);
            break;
        case LayerImpl::kSquare:
            if (s.in_form == Form::kConv || s.in_form == Form::kPlain) {
                throw std::logic_error(l.name + ": square needs a dense or per-channel input");
            }
            layer = square_stages(s.in_form == Form::kDense ? 1 : in.c, prefix);
            break;
    }
    out.insert(out.end(), layer.begin(), layer.end());
    return out;
}

CostReport predict_network(const runner::NetworkSpec& net, const runner::PackingPlan& plan) {
    runner::check_plan(net, plan);
    CostReport report;
    report.strategy = std::string(runner::strategy_name(plan.strategy));
    report.rotation_weight = net.scheme.rotation_weight;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        const runner::PlanStep& s = plan.steps[i];
        LayerCost lc;
        lc.index = i;
        lc.layer = l.name;
        lc.kind = std::string(runner::kind_name(l.kind));
        lc.label = s.label();
        for (engine::Stage& st : predict_step(net, plan, i)) {
            lc.stages.push_back({std::move(st.name), st.ops, std::nullopt});
        }
        const std::size_t n = net.scheme.slot_count;
        const auto uses = dense_uses(l, s);
        if (!uses.empty()) {
            CostTriple f;
            for (const DenseUse& u : uses) {
                f += predict_dense(u.in, u.kernel, n);
                if (engine::dense_conv_span(u.in, u.kernel, u.depthwise).log2_span != ceil_log2(u.in.size())) {
                    lc.span_divergence = true;
                }
            }
            lc.formula_dot = f;
        } else if (s.impl == LayerImpl::kFc) {
            const std::uint64_t o = l.out_channels;
            const std::uint64_t r = static_cast<std::uint64_t>(ceil_log2(l.in_shape.size()));
            lc.formula_dot = CostTriple{o, o * r, o * r};
        }
        if (lc.span_divergence) {
            lc.flags.push_back("dense-span");
        }
        report.layers.push_back(std::move(lc));
    }
    return report;
}

std::vector<PatternCost> compare_plans(const runner::NetworkSpec& net, std::size_t layer_index, std::size_t rank,
                                       double rotation_weight) {
    if (layer_index >= net.layers.size()) {
        throw std::out_of_range("layer index " + std::to_string(layer_index) + " out of range (network has " +
                                std::to_string(net.layers.size()) + " layers)");
    }
    const LayerSpec& l = net.layers[layer_index];
    if (l.kind != LayerKind::kConv && l.kind != LayerKind::kFfconv) {
        throw std::invalid_argument("layer " + std::to_string(layer_index) + " (" + l.name +
                                    ") is not a conv or ffconv layer");
    }
    const std::size_t r = rank != 0 ? rank : l.rank;
    if (r == 0) {
        throw std::invalid_argument("layer " + std::to_string(layer_index) + " (" + l.name + ") needs a rank");
    }
    Upstream upstream = Upstream::kPlain;
    if (layer_index > 0) {
        const runner::PackingPlan plan = runner::build_plan(net, runner::Strategy::kFfconvDefault);
        upstream = plan.steps[layer_index - 1].out_form == Form::kChannel ? Upstream::kChannel : Upstream::kDense;
    }
    return compare_patterns(l.in_shape, l.kernel(), r, net.scheme.slot_count, upstream, rotation_weight);
}

}  // namespace ffconv::cost
