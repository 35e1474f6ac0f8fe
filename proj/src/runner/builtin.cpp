// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <stdexcept>

#include "ffconv/runner/network.h"

namespace ffconv::runner {

const std::vector<Preset>& presets() {
    static const std::vector<Preset> kPresets = {
        {"lola-tinynet", 8192, {"1099511922689"}},
        {"ffconv-tinynet", 8192, {"576460752303439873"}},
        {"lola-widenet", 16384, {"34359771137", "34360754177"}},
        {"ffconv-widenet", 16384, {"9007199255560193", "9007199255658497"}},
    };
    return kPresets;
}

const Preset& find_preset(std::string_view name) {
    std::string known;
    for (const Preset& p : presets()) {
        if (p.name == name) {
            return p;
        }
        known += (known.empty() ? "" : ", ") + p.name;
    }
    throw std::invalid_argument("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

void apply_preset(NetworkSpec& net, const Preset& preset) {
    net.scheme.slot_count = preset.slot_count;
    net.scheme.t_factors = preset.t_factors;
    net.scheme.plain_modulus = parse_u128_product(preset.t_factors);
    validate_network(net);
}

namespace {

LayerSpec conv(std::size_t d, std::size_t stride, std::size_t out_channels, std::size_t rank = 0) {
    LayerSpec l;
    l.kind = rank == 0 ? LayerKind::kConv : LayerKind::kFfconv;
    l.d = d;
    l.stride = stride;
    l.out_channels = out_channels;
    l.rank = rank;
    return l;
}

LayerSpec square() { return LayerSpec{}; }

LayerSpec fc(std::size_t outputs) {
    LayerSpec l;
    l.kind = LayerKind::kFc;
    l.out_channels = outputs;
    return l;
}

NetworkSpec make(const char* preset, TensorShape input, std::vector<LayerSpec> layers) {
    NetworkSpec net;
    net.input_shape = input;
    net.layers = std::move(layers);
    apply_preset(net, find_preset(preset));
    return net;
}

}  // namespace

std::vector<std::string> builtin_network_names() { return {"tinynet", "ffconv-tinynet", "widenet", "ffconv-widenet"}; }

std::optional<NetworkSpec> builtin_network(std::string_view name) {
    // MNIST digits; one 8x8 stride-2 conv with 56 channels.
    if (name == "tinynet") {
        return make("lola-tinynet", {28, 28, 1}, {conv(8, 2, 56), square(), fc(10)});
    }
    if (name == "ffconv-tinynet") {
        return make("ffconv-tinynet", {28, 28, 1}, {conv(8, 2, 56, 13), square(), fc(10)});
    }
    // CIFAR-10 images padded to 34x34 so the 8x8 stride-2 conv yields 14x14.
    if (name == "widenet") {
        return make("lola-widenet", {34, 34, 3}, {conv(8, 2, 83), square(), conv(6, 2, 163), square(), fc(10)});
    }
    if (name == "ffconv-widenet") {
        return make("ffconv-widenet", {34, 34, 3},
                    {conv(8, 2, 83), square(), conv(6, 2, 163, 20), square(), fc(10)});
    }
    return std::nullopt;
}

NetworkSpec resolve_network(const std::string& name_or_path) {
    if (auto net = builtin_network(name_or_path)) {
        if (!std::filesystem::exists(name_or_path)) {
            return *net;
        }
    }
    return load_network(name_or_path);
}

}  // namespace ffconv::runner
