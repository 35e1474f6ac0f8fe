// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffconv/runner/plan.h"

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "ffconv/common/error.h"
#include "json.hpp"

namespace ffconv::runner {

using engine::Pattern;

namespace {

enum class Need { kDense, kConv, kAny };

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool dense_first(Pattern p) { return p == Pattern::kDpHi2cCp || p == Pattern::kDpDp; }

bool is_linear(LayerKind k) { return k != LayerKind::kSquare; }

// Kind of the next layer after `i` that is not a square, if any.
std::optional<LayerKind> next_linear(const NetworkSpec& net, std::size_t i) {
    for (std::size_t j = i + 1; j < net.layers.size(); ++j) {
        if (is_linear(net.layers[j].kind)) {
            return net.layers[j].kind;
        }
    }
    return std::nullopt;
}

Need need_of(const PlanStep& s) {
    switch (s.impl) {
        case LayerImpl::kDense:
        case LayerImpl::kFc:
            return Need::kDense;
        case LayerImpl::kConv:
        case LayerImpl::kConvReplicated:
            return Need::kConv;
        case LayerImpl::kFactorized:
            return dense_first(s.pattern) ? Need::kDense : Need::kConv;
        case LayerImpl::kSquare:
            return Need::kAny;
    }
    return Need::kAny;
}

// Kernel whose Im2Col columns the layer reads.
KernelSpec column_kernel(const LayerSpec& l) {
    switch (l.kind) {
        case LayerKind::kFfconv:
            return {l.d, l.stride, l.rank};
        case LayerKind::kAvgPool:
            return {l.d, l.stride, l.in_shape.c};
        default:
            return l.kernel();
    }
}

Form output_form(const PlanStep& s) {
    switch (s.impl) {
        case LayerImpl::kDense:
        case LayerImpl::kConvReplicated:
            return Form::kDense;
        case LayerImpl::kConv:
        case LayerImpl::kFc:
            return Form::kChannel;
        case LayerImpl::kFactorized:
            return s.pattern == Pattern::kDpHi2cCp || s.pattern == Pattern::kCpHi2cCp ? Form::kChannel
                                                                                       : Form::kDense;
        case LayerImpl::kSquare:
            return s.in_form;
    }
    return Form::kDense;
}

// Picks the transition that turns `from` into what step `s` reads.
void route(PlanStep& s, Form from, const KernelSpec& kernel) {
    const Need need = need_of(s);
    const bool pointwise = kernel.d == 1 && kernel.stride == 1;
    s.before = Transition::kNone;
    s.in_form = from;
    if (from == Form::kPlain) {
        if (need == Need::kConv) {
            s.before = s.impl == LayerImpl::kConvReplicated ? Transition::kClientIm2colReplicated
                                                            : Transition::kClientIm2col;
            s.in_form = Form::kConv;
            s.transition_kernel = kernel;
        } else {
            s.before = Transition::kClientDense;
            s.in_form = Form::kDense;
        }
        return;
    }
    if (need == Need::kDense && from == Form::kChannel) {
        s.before = Transition::kCombine;
        s.in_form = Form::kDense;
    } else if (need == Need::kConv) {
        if (from == Form::kDense) {
            s.before = pointwise ? Transition::kHGroupingFromDense : Transition::kHIm2colFromDense;
        } else {
            s.before = pointwise ? Transition::kHGrouping : Transition::kHIm2colFromConv;
        }
        s.in_form = Form::kConv;
        s.transition_kernel = kernel;
    }
}

std::string layer_label(const NetworkSpec& net, std::size_t i) {
    return "layer " + std::to_string(i) + " (" + net.layers[i].name + ")";
}

}  // namespace

std::string_view strategy_name(Strategy s) {
    switch (s) {
        case Strategy::kLolaDefault:
            return "lola-default";
        case Strategy::kFfconvDefault:
            return "ffconv-default";
        case Strategy::kExplicit:
            return "explicit";
    }
    return "?";
}

Strategy parse_strategy(std::string_view name) {
    for (Strategy s : {Strategy::kLolaDefault, Strategy::kFfconvDefault, Strategy::kExplicit}) {
        if (strategy_name(s) == lower(name)) {
            return s;
        }
    }
    throw std::invalid_argument("unknown plan strategy '" + std::string(name) +
                                "' (expected lola-default, ffconv-default or explicit)");
}

std::string_view form_name(Form f) {
    switch (f) {
        case Form::kPlain:
            return "plain";
        case Form::kDense:
            return "dense";
        case Form::kChannel:
            return "channel";
        case Form::kConv:
            return "columns";
    }
    return "?";
}

std::string_view transition_name(Transition t) {
    switch (t) {
        case Transition::kNone:
            return "none";
        case Transition::kClientDense:
            return "client-dense";
        case Transition::kClientIm2col:
            return "client-im2col";
        case Transition::kClientIm2colReplicated:
            return "client-im2col-replicated";
        case Transition::kHIm2colFromDense:
            return "hi2c-from-dense";
        case Transition::kHIm2colFromConv:
            return "hi2c-from-channels";
        case Transition::kHGrouping:
            return "grouping";
        case Transition::kHGroupingFromDense:
            return "grouping-from-dense";
        case Transition::kCombine:
            return "combine";
    }
    return "?";
}

std::string_view impl_name(LayerImpl impl) {
    switch (impl) {
        case LayerImpl::kDense:
            return "dense";
        case LayerImpl::kConv:
            return "conv";
        case LayerImpl::kConvReplicated:
            return "conv-replicated";
        case LayerImpl::kFactorized:
            return "factorized";
        case LayerImpl::kFc:
            return "fc";
        case LayerImpl::kSquare:
            return "square";
    }
    return "?";
}

std::string PlanStep::label() const {
    return impl == LayerImpl::kFactorized ? std::string(engine::pattern_name(pattern)) : std::string(impl_name(impl));
}

PackingPlan build_plan(const NetworkSpec& net, Strategy strategy) {
    PackingPlan plan;
    plan.strategy = strategy;
    Form form = Form::kPlain;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        const std::string hint = lower(l.packing_hint);
        const bool explicit_mode = strategy == Strategy::kExplicit;
        auto bad_hint = [&](const std::string& expected) {
            return SchemaError(layer_label(net, i) + ": packing_hint '" + l.packing_hint + "' is invalid; expected " +
                               expected);
        };
        PlanStep s;
        switch (l.kind) {
            case LayerKind::kConv: {
                bool columns = form == Form::kPlain;
                if (explicit_mode) {
                    if (hint != "dense" && hint != "conv") {
                        throw bad_hint("dense or conv");
                    }
                    columns = hint == "conv";
                }
                s.impl = columns ? LayerImpl::kConv : LayerImpl::kDense;
                if (columns && form == Form::kPlain) {
                    const auto next = next_linear(net, i);
                    if (next && *next != LayerKind::kFc) {
                        s.impl = LayerImpl::kConvReplicated;
                    }
                }
                break;
            }
            case LayerKind::kFfconv:
                s.impl = LayerImpl::kFactorized;
                if (explicit_mode) {
                    try {
                        s.pattern = engine::parse_pattern(l.packing_hint);
                    } catch (const std::invalid_argument&) {
                        throw bad_hint("DP-HI2C-CP, CP-HI2C-CP, CP-HI2C-DP or DP-DP");
                    }
                } else {
                    s.pattern = form == Form::kDense ? Pattern::kDpHi2cCp : Pattern::kCpHi2cCp;
                }
                break;
            case LayerKind::kAvgPool:
                if (explicit_mode) {
                    if (hint != "dense" && hint != "conv") {
                        throw bad_hint("dense or conv");
                    }
                    s.impl = hint == "conv" ? LayerImpl::kConv : LayerImpl::kDense;
                } else {
                    s.impl = form == Form::kChannel ? LayerImpl::kConv : LayerImpl::kDense;
                }
                break;
            case LayerKind::kFc:
                if (explicit_mode && !hint.empty() && hint != "dense") {
                    throw bad_hint("dense or nothing");
                }
                s.impl = LayerImpl::kFc;
                s.mask_outputs = next_linear(net, i).has_value();
                break;
            case LayerKind::kSquare:
                if (explicit_mode && !hint.empty()) {
                    throw bad_hint("nothing");
                }
                s.impl = LayerImpl::kSquare;
                break;
        }
        route(s, form, column_kernel(l));
        s.out_form = output_form(s);
        form = s.out_form;
        plan.steps.push_back(s);
    }

    // Combine once before a run of squares rather than squaring every channel.
    for (std::size_t j = 0; j < plan.steps.size(); ++j) {
        if (plan.steps[j].before != Transition::kCombine) {
            continue;
        }
        std::size_t k = j;
        while (k > 0 && plan.steps[k - 1].impl == LayerImpl::kSquare &&
               plan.steps[k - 1].before == Transition::kNone) {
            --k;
        }
        if (k == j) {
            continue;
        }
        plan.steps[k].before = Transition::kCombine;
        for (std::size_t m = k; m < j; ++m) {
            plan.steps[m].in_form = Form::kDense;
            plan.steps[m].out_form = Form::kDense;
        }
        plan.steps[j].before = Transition::kNone;
    }
    check_plan(net, plan);
    return plan;
}

void check_plan(const NetworkSpec& net, const PackingPlan& plan) {
    if (plan.steps.size() != net.layers.size()) {
        throw std::logic_error("plan has " + std::to_string(plan.steps.size()) + " steps for " +
                               std::to_string(net.layers.size()) + " layers");
    }
    Form form = Form::kPlain;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const PlanStep& s = plan.steps[i];
        PlanStep expect = s;
        if (s.before == Transition::kCombine && s.impl == LayerImpl::kSquare) {
            // Hoisted combine: the square itself reads any form.
            if (form != Form::kChannel || s.in_form != Form::kDense) {
                throw std::logic_error(layer_label(net, i) + ": combine needs a per-channel input");
            }
        } else {
            route(expect, form, column_kernel(net.layers[i]));
            if (expect.before != s.before || expect.in_form != s.in_form) {
                throw std::logic_error(layer_label(net, i) + ": transition " +
                                       std::string(transition_name(s.before)) + " does not turn " +
                                       std::string(form_name(form)) + " into the input of " + s.label());
            }
        }
        if (s.impl == LayerImpl::kConvReplicated && s.before != Transition::kClientIm2colReplicated) {
            throw std::logic_error(layer_label(net, i) + ": a replicated column pack exists only on the raw input");
        }
        if (output_form(s) != s.out_form) {
            throw std::logic_error(layer_label(net, i) + ": inconsistent output form");
        }
        form = s.out_form;
    }
}

std::string describe_plan(const NetworkSpec& net, const PackingPlan& plan) {
    std::ostringstream os;
    os << "strategy " << strategy_name(plan.strategy) << ", " << net.scheme.params().describe() << "\n";
    os << std::left << std::setw(4) << "#" << std::setw(10) << "layer" << std::setw(26) << "shape" << std::setw(26)
       << "transition" << std::setw(16) << "scheme"
       << "forms\n";
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        const PlanStep& s = plan.steps[i];
        std::string label = s.label();
        if (s.impl == LayerImpl::kFc && s.mask_outputs) {
            label += "+mask";
        }
        os << std::setw(4) << i << std::setw(10) << l.name << std::setw(26)
           << (l.in_shape.str() + " -> " + l.out_shape.str()) << std::setw(26) << transition_name(s.before)
           << std::setw(16) << label << form_name(s.in_form) << " -> " << form_name(s.out_form) << "\n";
    }
    return os.str();
}

std::string plan_to_json(const NetworkSpec& net, const PackingPlan& plan) {
    nlohmann::ordered_json doc;
    doc["strategy"] = strategy_name(plan.strategy);
    nlohmann::ordered_json steps = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const PlanStep& s = plan.steps[i];
        nlohmann::ordered_json j;
        j["layer"] = net.layers[i].name;
        j["kind"] = kind_name(net.layers[i].kind);
        j["transition"] = transition_name(s.before);
        j["scheme"] = s.label();
        j["in_form"] = form_name(s.in_form);
        j["out_form"] = form_name(s.out_form);
        if (s.impl == LayerImpl::kFc) {
            j["mask_outputs"] = s.mask_outputs;
        }
        steps.push_back(j);
    }
    doc["steps"] = steps;
    return doc.dump(2) + "\n";
}

}  // namespace ffconv::runner
