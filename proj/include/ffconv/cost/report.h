// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

// Per-layer cost reports for a planned network: exact stage predictions,
// optionally paired with counters measured by the runner.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ffconv/cost/cost_model.h"
#include "ffconv/cost/engine_counts.h"
#include "ffconv/runner/plan.h"
#include "json.hpp"

namespace ffconv::cost {

// {"mul_pc": .., "add_cc": .., ...} in field order.
nlohmann::ordered_json counters_json(const he::OpCounters& c);

struct StageCost {
    std::string name;
    he::OpCounters predicted;
    std::optional<he::OpCounters> measured;

    bool matches() const { return !measured || *measured == predicted; }
};

struct LayerCost {
    std::size_t index = 0;
    std::string layer;  // conv1, square1, ...
    std::string kind;
    std::string label;  // scheme or pattern
    std::vector<StageCost> stages;
    // Closed-form count of the layer's rotate-and-sum stages (names ending
    // in "dot"), with r taken from the occupied input length.
    std::optional<CostTriple> formula_dot;
    // The engine's rotate-and-sum span differs from the occupied-length one,
    // so formula_dot is not expected to match.
    bool span_divergence = false;
    std::vector<std::string> flags;

    he::OpCounters predicted() const;
    std::optional<he::OpCounters> measured() const;
    // Sum of the stages named "*dot", measured if available.
    CostTriple dot_counts() const;
};

struct CostReport {
    std::string strategy;
    double rotation_weight = kDefaultRotationWeight;
    std::vector<LayerCost> layers;

    he::OpCounters predicted_total() const;
    std::optional<he::OpCounters> measured_total() const;
    // Stage and layer names whose measured counters differ from prediction.
    std::vector<std::string> mismatches() const;
    // Looks up a stage by its full name ("conv2.w1.dot").
    const StageCost* find_stage(const std::string& name) const;

    // Pairs measured stages with predicted ones by name. Measured stages
    // without a prediction are appended with zero predicted counters.
    void attach_measured(std::size_t layer, const Stages& measured);

    std::string table() const;
    // One record per layer, then a total record.
    std::string jsonl() const;
};

// Stages the runner logs for step i, names prefixed "<layer>.".
Stages predict_step(const runner::NetworkSpec& net, const runner::PackingPlan& plan, std::size_t i);
CostReport predict_network(const runner::NetworkSpec& net, const runner::PackingPlan& plan);

// The four factorized packings of layer `layer_index` (a conv or ffconv
// layer) at `rank`, given the layout the ffconv-default plan hands it.
// rank 0 uses the layer's own rank. Ascending by weighted cost.
std::vector<PatternCost> compare_plans(const runner::NetworkSpec& net, std::size_t layer_index, std::size_t rank,
                                       double rotation_weight);

}  // namespace ffconv::cost
