// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

// Executes a planned network on the simulated scheme and, separately, on
// plain integers.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ffconv/cost/report.h"
#include "ffconv/he/evaluator.h"
#include "ffconv/runner/ledger.h"
#include "ffconv/runner/network.h"
#include "ffconv/runner/plan.h"
#include "ffconv/runner/weights_io.h"

namespace ffconv::runner {

struct RunOptions {
    he::EvalMode mode = he::EvalMode::kValues;
    Strategy strategy = Strategy::kFfconvDefault;
    std::optional<PackingPlan> plan;  // overrides `strategy`
    // Largest |input| the ledger assumes; 0 means max|input| of this input.
    u128 input_bound = 0;
    bool keep_layer_outputs = true;
};

struct LayerRun {
    std::string name;
    std::vector<engine::Stage> stages;  // names prefixed "<layer>."
    he::OpCounters ops;
    int depth = 0;           // multiplicative depth this layer adds
    int assembly_depth = 0;  // mask depth this layer adds
    TensorShape shape;
    Form form = Form::kDense;
    std::optional<Tensor3> output;  // decrypted, values mode only
};

struct RunResult {
    PackingPlan plan;
    ScaleLedger ledger;
    std::vector<LayerRun> layers;
    std::optional<Tensor3> output;  // decrypted final tensor, values mode only
    he::OpCounters total;
    int depth = 0;
    int assembly_depth = 0;
    // Count-only runs record ledger violations here instead of throwing.
    std::vector<std::string> flags;

    // Flattened output in dense order.
    std::vector<i128> logits() const;
};

// Throws ModulusTooSmallError (values mode) when the ledger rejects the
// network, WeightDataError when the weights do not fit it and ShapeError
// when the input shape differs from the network's.
RunResult run_encrypted(const NetworkSpec& net, const NetworkWeights& weights, const Tensor3& input,
                        const RunOptions& options = {});

struct ReferenceRun {
    std::vector<Tensor3> outputs;  // one per layer
    std::vector<u128> peaks;       // largest |value| per layer, W1 stage included
    const Tensor3& output() const { return outputs.back(); }
};

// Direct integer evaluation with the same weights and integer semantics
// (sum pooling, biases added on the product scale).
ReferenceRun run_reference(const NetworkSpec& net, const NetworkWeights& weights, const Tensor3& input);

struct VerifyReport {
    bool ok = true;
    std::vector<std::string> failures;
    std::vector<std::string> warnings;
    std::optional<std::size_t> first_bad_layer;
    cost::CostReport cost;
    RunResult run;
};

// Runs both paths and compares every layer's output, the measured counters
// against the stage predictions, the rotate-and-sum counts against the
// closed forms and the observed magnitudes against the ledger. A closed-form
// mismatch on a layer flagged dense-span is a warning, not a failure.
VerifyReport verify(const NetworkSpec& net, const NetworkWeights& weights, const Tensor3& input,
                    const RunOptions& options = {});

// Reads raw uint8 values, one per element in dense CHW order.
Tensor3 input_from_bytes(const TensorShape& shape, std::string_view bytes);

}  // namespace ffconv::runner
