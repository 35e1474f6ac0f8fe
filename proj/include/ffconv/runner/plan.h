// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ffconv/engine/engine.h"
#include "ffconv/runner/network.h"

namespace ffconv::runner {

enum class Strategy { kLolaDefault, kFfconvDefault, kExplicit };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

// How a tensor is laid out between layers.
enum class Form {
    kPlain,    // not yet encrypted
    kDense,    // one ciphertext, CHW order
    kChannel,  // one ciphertext per channel
    kConv,     // Im2Col columns, only ever consumed by the next layer
};
std::string_view form_name(Form f);

// Layout change applied in front of a layer. Client transitions happen
// before encryption and cost nothing homomorphically.
enum class Transition {
    kNone,
    kClientDense,
    kClientIm2col,
    kClientIm2colReplicated,
    kHIm2colFromDense,
    kHIm2colFromConv,
    kHGrouping,
    kHGroupingFromDense,
    kCombine,
};
std::string_view transition_name(Transition t);
inline bool is_client(Transition t) {
    return t == Transition::kClientDense || t == Transition::kClientIm2col ||
           t == Transition::kClientIm2colReplicated;
}

enum class LayerImpl {
    kDense,           // conv_dense with dense assembly, or dense pooling
    kConv,            // conv_conv on Im2Col columns, or pooling on columns
    kConvReplicated,  // conv_conv_replicated, first layer only
    kFactorized,      // ffconv_layer with `pattern`
    kFc,
    kSquare,
};
std::string_view impl_name(LayerImpl impl);

struct PlanStep {
    Transition before = Transition::kNone;
    KernelSpec transition_kernel;  // Im2Col geometry for the transition
    Form in_form = Form::kPlain;   // after `before`
    LayerImpl impl = LayerImpl::kSquare;
    engine::Pattern pattern = engine::Pattern::kDpHi2cCp;
    bool mask_outputs = false;  // fc only
    Form out_form = Form::kDense;

    // "DP-HI2C-CP" for factorized layers, the impl name otherwise.
    std::string label() const;
};

struct PackingPlan {
    Strategy strategy = Strategy::kFfconvDefault;
    std::vector<PlanStep> steps;
};

// lola-default: the first conv takes client Im2Col columns, later convs
// are dense. ffconv-default: as lola-default, and a factorized layer uses
// DP-HI2C-CP after a dense output and CP-HI2C-CP after a per-channel output
// or on the raw input. explicit: every conv, ffconv and avgpool layer names
// its scheme in packing_hint ("dense" or "conv", or a pattern name).
//
// The first conv writes a replicated column pack, and so a dense output,
// when the next linear layer is a conv, ffconv or pooling layer; before an
// fc layer it writes one ciphertext per channel. Combines that feed a dense
// consumer are moved in front of any squares between them.
//
// Throws SchemaError naming the layer on a missing or invalid hint.
PackingPlan build_plan(const NetworkSpec& net, Strategy strategy);

// Throws std::logic_error if a step's input form does not match what its
// layer consumes or what the previous step produced.
void check_plan(const NetworkSpec& net, const PackingPlan& plan);

std::string describe_plan(const NetworkSpec& net, const PackingPlan& plan);
std::string plan_to_json(const NetworkSpec& net, const PackingPlan& plan);

}  // namespace ffconv::runner
