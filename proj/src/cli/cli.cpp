// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffconv/cli/cli.h"

#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ffconv/common/error.h"
#include "ffconv/cost/report.h"
#include "ffconv/factor/factor.h"
#include "ffconv/runner/runner.h"
#include "json.hpp"

namespace ffconv::cli {

using nlohmann::ordered_json;
using runner::LayerKind;
using runner::NetworkSpec;
using runner::NetworkWeights;

namespace {

struct Options {
    std::string net;
    std::string weights;
    std::string input;
    std::string output;
    std::string preset;
    std::string pattern;
    std::string strategy = "ffconv-default";
    std::string layer;
    std::size_t rank = 0;
    double budget = -1.0;
    double rotation_weight = 0.0;
    std::size_t trials = 1;
    std::uint64_t seed = 1;
};

ordered_json int_json(i128 v) {
    if (v >= std::numeric_limits<std::int64_t>::min() && v <= std::numeric_limits<std::int64_t>::max()) {
        return static_cast<std::int64_t>(v);
    }
    return to_string(v);
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
    if (o.output.empty()) {
        out << text;
    } else {
        runner::write_file_atomic(o.output, text);
    }
}

NetworkSpec load_net(const Options& o) {
    NetworkSpec net = runner::resolve_network(o.net);
    if (!o.preset.empty()) {
        runner::apply_preset(net, runner::find_preset(o.preset));
    }
    if (o.rotation_weight > 0) {
        net.scheme.rotation_weight = o.rotation_weight;
    }
    return net;
}

// The strategy's plan, or with --pattern every ffconv layer pinned to it
// and the other layers kept as the strategy placed them.
runner::PackingPlan make_plan(NetworkSpec& net, const Options& o) {
    const runner::Strategy strategy = runner::parse_strategy(o.strategy);
    if (o.pattern.empty()) {
        return runner::build_plan(net, strategy);
    }
    const engine::Pattern p = engine::parse_pattern(o.pattern);
    const runner::PackingPlan base = runner::build_plan(net, strategy);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        runner::LayerSpec& l = net.layers[i];
        switch (l.kind) {
            case LayerKind::kFfconv:
                l.packing_hint = std::string(engine::pattern_name(p));
                break;
            case LayerKind::kConv:
            case LayerKind::kAvgPool:
                l.packing_hint = base.steps[i].impl == runner::LayerImpl::kDense ? "dense" : "conv";
                break;
            default:
                l.packing_hint.clear();
                break;
        }
    }
    return runner::build_plan(net, runner::Strategy::kExplicit);
}

// --layer as an index or a name; by default the last conv or ffconv layer.
std::size_t pick_layer(const NetworkSpec& net, const std::string& layer) {
    if (layer.empty()) {
        for (std::size_t i = net.layers.size(); i-- > 0;) {
            if (net.layers[i].kind == LayerKind::kConv || net.layers[i].kind == LayerKind::kFfconv) {
                return i;
            }
        }
        throw std::invalid_argument("network has no conv layer");
    }
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (net.layers[i].name == layer) {
            return i;
        }
    }
    std::size_t used = 0;
    std::size_t idx = 0;
    try {
        idx = std::stoul(layer, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != layer.size() || idx >= net.layers.size()) {
        throw std::invalid_argument("unknown layer '" + layer + "'");
    }
    return idx;
}

Tensor3 random_binary(const TensorShape& shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> bit(0, 1);
    Tensor3 t(shape);
    for (auto& v : t.data()) {
        v = bit(rng);
    }
    return t;
}

std::string triple(const cost::CostTriple& c) {
    return "(" + std::to_string(c.mul_pc) + ", " + std::to_string(c.add_cc) + ", " + std::to_string(c.rot) + ")";
}

int cmd_run(const Options& o, std::ostream& out) {
    NetworkSpec net = load_net(o);
    const runner::PackingPlan plan = make_plan(net, o);
    const NetworkWeights weights = runner::load_weights(net, o.weights);
    const Tensor3 input = runner::input_from_bytes(net.input_shape, runner::read_file(o.input));
    runner::RunOptions ro;
    ro.plan = plan;
    ro.keep_layer_outputs = false;
    const runner::RunResult r = runner::run_encrypted(net, weights, input, ro);

    cost::CostReport report = cost::predict_network(net, plan);
    for (std::size_t i = 0; i < r.layers.size(); ++i) {
        report.attach_measured(i, r.layers[i].stages);
    }
    ordered_json run;
    run["type"] = "run";
    run["network"] = o.net;
    run["strategy"] = runner::strategy_name(plan.strategy);
    run["N"] = net.scheme.slot_count;
    run["t"] = to_string(net.scheme.plain_modulus);
    ordered_json logits = ordered_json::array();
    for (i128 v : r.logits()) {
        logits.push_back(int_json(v));
    }
    run["logits"] = logits;
    run["logit_scale"] = r.ledger.layers.empty() ? 1.0 : r.ledger.layers.back().scale;
    std::size_t argmax = 0;
    const auto lv = r.logits();
    for (std::size_t i = 1; i < lv.size(); ++i) {
        if (lv[i] > lv[argmax]) {
            argmax = i;
        }
    }
    run["argmax"] = argmax;
    run["depth"] = r.depth;
    run["assembly_depth"] = r.assembly_depth;
    ordered_json depths = ordered_json::array();
    for (const runner::LayerRun& l : r.layers) {
        depths.push_back(l.depth);
    }
    run["layer_depths"] = depths;
    const std::string text = run.dump() + "\n" + report.jsonl();
    emit(o, text, out);
    if (!o.output.empty()) {
        out << "logits";
        for (i128 v : lv) {
            out << " " << to_string(v);
        }
        out << "\nwrote " << o.output << "\n";
    }
    return kExitOk;
}

int cmd_plan(const Options& o, std::ostream& out) {
    NetworkSpec net = load_net(o);
    const runner::PackingPlan plan = make_plan(net, o);
    out << runner::describe_plan(net, plan);
    if (!o.output.empty()) {
        runner::write_file_atomic(o.output, runner::plan_to_json(net, plan));
    }
    return kExitOk;
}

int cmd_factorize(const Options& o, std::ostream& out) {
    if ((o.rank == 0) == (o.budget < 0)) {
        throw CLI::ValidationError("factorize needs exactly one of --rank and --budget");
    }
    NetworkSpec net = load_net(o);
    const NetworkWeights weights = runner::load_weights(net, o.weights);
    const std::size_t idx = pick_layer(net, o.layer);
    const runner::LayerSpec& l = net.layers[idx];
    if (l.kind != LayerKind::kConv) {
        throw std::invalid_argument("layer " + std::to_string(idx) + " (" + l.name + ") is not a conv layer");
    }
    const engine::WeightMatrix& wq = weights.layers[idx].w;
    const RealMatrix w = factor::dequantize(wq);
    const factor::Svd s = factor::svd(w);
    const std::size_t rank = o.rank != 0 ? o.rank : factor::rank_search(s.sigma, o.budget);
    const factor::FactorizedPair pair = factor::truncated_svd(s, rank);
    const double norm = factor::frobenius_norm(w);
    const double rel = norm > 0 ? factor::reconstruction_error(w, pair) / norm : 0.0;
    const engine::QuantizedPair q = factor::quantize_factors(pair, wq.bits);
    const factor::FactorizedPair back{factor::dequantize(q.w1), factor::dequantize(q.w2)};
    const double qrel = norm > 0 ? factor::reconstruction_error(w, back) / norm : 0.0;

    std::ostringstream os;
    os << std::setprecision(6);
    os << "layer " << idx << " (" << l.name << "): K=" << wq.k() << " O_c=" << wq.out_channels() << " rank "
       << rank << (o.rank != 0 ? "" : " (budget " + std::to_string(o.budget) + ")") << "\n";
    os << "  w1 " << l.d << "x" << l.d << "x" << l.in_shape.c << "x" << rank << ", w2 1x1x" << rank << "x"
       << l.out_channels << "\n";
    os << "  relative error " << rel << ", after " << wq.bits << "-bit quantization " << qrel << "\n";
    out << os.str();

    if (!o.output.empty()) {
        NetworkSpec fnet = net;
        fnet.layers[idx].kind = LayerKind::kFfconv;
        fnet.layers[idx].rank = rank;
        fnet.layers[idx].packing_hint.clear();
        runner::validate_network(fnet);
        NetworkWeights fw = weights;
        fw.layers[idx].pair = q;
        fw.layers[idx].w = {};
        // Biases live on the product scale, which changes with the factors.
        const double ratio = wq.scale / (q.w1.scale * q.w2.scale);
        for (i128& b : fw.layers[idx].bias.entries) {
            b = static_cast<i128>(std::llround(static_cast<double>(b) * ratio));
        }
        std::string base = o.output;
        for (const char* ext : {".json", ".bin"}) {
            const std::string e(ext);
            if (base.size() > e.size() && base.compare(base.size() - e.size(), e.size(), e) == 0) {
                base.resize(base.size() - e.size());
            }
        }
        runner::save_weights(fnet, fw, base);
        runner::write_file_atomic(base + ".net.json", runner::network_to_json(fnet));
        out << "wrote " << base << ".net.json, " << base << ".json, " << base << ".bin\n";
    }
    return kExitOk;
}

int cmd_compare(const Options& o, std::ostream& out) {
    NetworkSpec net = load_net(o);
    const std::size_t idx = pick_layer(net, o.layer);
    const runner::LayerSpec& l = net.layers[idx];
    const std::size_t rank = o.rank != 0 ? o.rank : l.rank;
    if (rank == 0) {
        throw CLI::ValidationError("--rank is required for a conv layer");
    }
    const double weight = net.scheme.rotation_weight;
    const auto rows = cost::compare_plans(net, idx, rank, weight);
    std::ostringstream os;
    os << "layer " << idx << " (" << l.name << ") " << l.in_shape.str() << " -> " << l.out_shape.str() << ", d=" << l.d
       << " stride=" << l.stride << ", rank " << rank << ", rotation weight " << weight << "\n";
    os << std::left << std::setw(13) << "pattern" << std::setw(24) << "upstream" << std::setw(24) << "W1"
       << std::setw(20) << "transition" << std::setw(24) << "W2" << std::setw(26) << "total"
       << "weighted\n";
    ordered_json doc = ordered_json::array();
    for (const cost::PatternCost& c : rows) {
        os << std::setw(13) << engine::pattern_name(c.pattern) << std::setw(24) << triple(c.upstream) << std::setw(24)
           << triple(c.first) << std::setw(20) << triple(c.transition) << std::setw(24) << triple(c.second)
           << std::setw(26) << triple(c.total) << std::fixed << std::setprecision(0) << c.weighted << "\n";
        auto tj = [](const cost::CostTriple& t) {
            return ordered_json{{"mul_pc", t.mul_pc}, {"add_cc", t.add_cc}, {"rot", t.rot}};
        };
        ordered_json j;
        j["pattern"] = engine::pattern_name(c.pattern);
        j["upstream"] = tj(c.upstream);
        j["first"] = tj(c.first);
        j["transition"] = tj(c.transition);
        j["second"] = tj(c.second);
        j["total"] = tj(c.total);
        j["weighted"] = c.weighted;
        doc.push_back(j);
    }
    out << os.str();
    if (!o.output.empty()) {
        ordered_json top;
        top["layer"] = l.name;
        top["rank"] = rank;
        top["rotation_weight"] = weight;
        top["patterns"] = doc;
        runner::write_file_atomic(o.output, top.dump(2) + "\n");
    }
    return kExitOk;
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
    NetworkSpec net = load_net(o);
    const runner::PackingPlan plan = make_plan(net, o);
    std::optional<NetworkWeights> fixed;
    if (!o.weights.empty()) {
        try {
            fixed = runner::load_weights(net, o.weights);
        } catch (const WeightDataError& e) {
            err << "verify: corrupted weights: " << e.what() << "\n";
            return kExitVerify;
        }
    }
    std::optional<Tensor3> input;
    if (!o.input.empty()) {
        input = runner::input_from_bytes(net.input_shape, runner::read_file(o.input));
    }
    std::size_t passed = 0;
    std::ostringstream log;
    for (std::size_t trial = 0; trial < o.trials; ++trial) {
        const std::uint64_t seed = o.seed * 1000003ULL + trial;
        const NetworkWeights w = fixed ? *fixed : runner::random_weights(net, seed, 1);
        const Tensor3 x = input ? *input : random_binary(net.input_shape, seed ^ 0x9e3779b97f4a7c15ULL);
        runner::RunOptions ro;
        ro.plan = plan;
        const runner::VerifyReport v = runner::verify(net, w, x, ro);
        if (v.ok) {
            ++passed;
        } else {
            log << "trial " << trial << " (seed " << seed << "): FAIL";
            if (v.first_bad_layer) {
                log << " at layer " << *v.first_bad_layer;
            }
            log << "\n";
            for (const std::string& f : v.failures) {
                log << "  " << f << "\n";
            }
        }
        for (const std::string& w2 : v.warnings) {
            log << "  warning: " << w2 << "\n";
        }
    }
    log << "verify " << o.net << ": " << passed << "/" << o.trials << " trials passed\n";
    emit(o, log.str(), out);
    if (!o.output.empty()) {
        out << passed << "/" << o.trials << " trials passed\n";
    }
    return passed == o.trials ? kExitOk : kExitVerify;
}

int cmd_report(const Options& o, std::ostream& out) {
    NetworkSpec net = load_net(o);
    const runner::PackingPlan plan = make_plan(net, o);
    const NetworkWeights w = o.weights.empty() ? runner::random_weights(net, o.seed, 1)
                                               : runner::load_weights(net, o.weights);
    const Tensor3 x = o.input.empty() ? Tensor3(net.input_shape)
                                      : runner::input_from_bytes(net.input_shape, runner::read_file(o.input));
    runner::RunOptions ro;
    ro.plan = plan;
    ro.mode = he::EvalMode::kCountOnly;
    const runner::RunResult r = runner::run_encrypted(net, w, x, ro);
    cost::CostReport report = cost::predict_network(net, plan);
    for (std::size_t i = 0; i < r.layers.size(); ++i) {
        report.attach_measured(i, r.layers[i].stages);
    }
    out << runner::describe_plan(net, plan) << "\n" << report.table();
    for (const std::string& f : r.flags) {
        out << "flag: " << f << "\n";
    }
    for (const cost::LayerCost& l : report.layers) {
        if (l.span_divergence) {
            out << "flag: " << l.layer << " rotate-and-sum span differs from the occupied input length\n";
        }
    }
    if (!o.output.empty()) {
        runner::write_file_atomic(o.output, report.jsonl());
    }
    return report.mismatches().empty() ? kExitOk : kExitVerify;
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simulated packed-HE convolution engine with low-rank conv layers"};
    app.name("ffconv");
    app.require_subcommand(1);
    Options o;

    auto add_net = [&](CLI::App* sub) {
        sub->add_option("--net", o.net, "built-in network name or network JSON file")->required();
        sub->add_option("--preset", o.preset, "cryptosystem preset overriding the network's N and t");
        sub->add_option("--rotation-weight", o.rotation_weight, "cost of one rotation in additions")
            ->check(CLI::PositiveNumber);
    };
    auto add_plan = [&](CLI::App* sub) {
        sub->add_option("--strategy", o.strategy, "lola-default, ffconv-default or explicit");
        sub->add_option("--pattern", o.pattern, "packing pattern for every ffconv layer");
    };

    CLI::App* run = app.add_subcommand("run", "encrypted inference on one input");
    add_net(run);
    add_plan(run);
    run->add_option("--weights", o.weights, "weight manifest (.json) or blob (.bin)")->required();
    run->add_option("--input", o.input, "raw uint8 input in CHW order")->required();
    run->add_option("--output", o.output, "write JSON lines here instead of stdout");

    CLI::App* plan = app.add_subcommand("plan", "show the packing plan");
    add_net(plan);
    add_plan(plan);
    plan->add_option("--output", o.output, "also write the plan as JSON");

    CLI::App* fact = app.add_subcommand("factorize", "low-rank factorization of a conv layer");
    add_net(fact);
    fact->add_option("--weights", o.weights, "weight manifest")->required();
    fact->add_option("--layer", o.layer, "layer index or name (default: last conv layer)");
    fact->add_option("--rank", o.rank, "target rank")->check(CLI::PositiveNumber);
    fact->add_option("--budget", o.budget, "relative Frobenius error budget in [0, 1)")->check(CLI::Range(0.0, 0.999999));
    fact->add_option("--output", o.output, "base path for the factorized network and weights");

    CLI::App* cmp = app.add_subcommand("compare-packings", "rank the four packings of a factorized layer");
    add_net(cmp);
    cmp->add_option("--layer", o.layer, "layer index or name (default: last conv layer)");
    cmp->add_option("--rank", o.rank, "rank (default: the layer's own)")->check(CLI::PositiveNumber);
    cmp->add_option("--output", o.output, "also write the table as JSON");

    CLI::App* ver = app.add_subcommand("verify", "compare encrypted and plain evaluation");
    add_net(ver);
    add_plan(ver);
    ver->add_option("--weights", o.weights, "weight manifest (default: random ternary weights per trial)");
    ver->add_option("--input", o.input, "raw uint8 input (default: random binary input per trial)");
    ver->add_option("--trials", o.trials, "number of trials")->check(CLI::PositiveNumber);
    ver->add_option("--seed", o.seed, "seed for random weights and inputs");
    ver->add_option("--output", o.output, "write the log here instead of stdout");

    CLI::App* rep = app.add_subcommand("report", "predicted and measured operation counts");
    add_net(rep);
    add_plan(rep);
    rep->add_option("--weights", o.weights, "weight manifest (default: random)");
    rep->add_option("--input", o.input, "raw uint8 input (counts do not depend on it)");
    rep->add_option("--seed", o.seed, "seed for random weights");
    rep->add_option("--output", o.output, "also write the report as JSON lines");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (run->parsed()) {
            return cmd_run(o, out);
        }
        if (plan->parsed()) {
            return cmd_plan(o, out);
        }
        if (fact->parsed()) {
            return cmd_factorize(o, out);
        }
        if (cmp->parsed()) {
            return cmd_compare(o, out);
        }
        if (ver->parsed()) {
            return cmd_verify(o, out, err);
        }
        if (rep->parsed()) {
            return cmd_report(o, out);
        }
    } catch (const CLI::ValidationError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace ffconv::cli
