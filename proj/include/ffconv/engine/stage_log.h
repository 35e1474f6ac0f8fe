// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "ffconv/he/evaluator.h"

namespace ffconv::engine {

struct Stage {
    std::string name;
    he::OpCounters ops;
};

// Splits an evaluator's counters into named consecutive stages.
class StageLog {
public:
    StageLog() = default;
    explicit StageLog(const he::Evaluator& ev) : last_(ev.counters()) {}

    // Records the operations since the previous mark as a stage. Empty
    // stages are kept so callers can rely on the stage sequence.
    void mark(const he::Evaluator& ev, std::string name) {
        stages_.push_back({std::move(name), ev.counters() - last_});
        last_ = ev.counters();
    }
    void sync(const he::Evaluator& ev) { last_ = ev.counters(); }

    const std::vector<Stage>& stages() const { return stages_; }
    he::OpCounters total() const {
        he::OpCounters sum;
        for (const Stage& s : stages_) {
            sum += s.ops;
        }
        return sum;
    }

private:
    he::OpCounters last_;
    std::vector<Stage> stages_;
};

}  // namespace ffconv::engine
