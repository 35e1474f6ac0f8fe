// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ffconv/common/int128.h"
#include "ffconv/he/scheme_params.h"
#include "ffconv/tensor/tensor.h"

namespace ffconv::runner {

enum class LayerKind { kConv, kFfconv, kFc, kSquare, kAvgPool };

std::string_view kind_name(LayerKind kind);
// Throws SchemaError on an unknown name.
LayerKind parse_kind(std::string_view name);

struct LayerSpec {
    LayerKind kind = LayerKind::kSquare;
    std::size_t d = 0;
    std::size_t stride = 1;
    std::size_t out_channels = 0;
    std::size_t rank = 0;  // ffconv only
    std::string packing_hint;

    // Filled in by validate_network.
    std::string name;
    TensorShape in_shape;
    TensorShape out_shape;

    KernelSpec kernel() const { return {d, stride, out_channels}; }
    // Layers that carry weights.
    bool has_weights() const { return kind == LayerKind::kConv || kind == LayerKind::kFfconv || kind == LayerKind::kFc; }
};

struct SchemeSpec {
    std::size_t slot_count = 0;
    std::vector<std::string> t_factors;  // decimal strings; t is their product
    u128 plain_modulus = 0;
    double rotation_weight = 10.0;

    he::SchemeParams params() const;
};

struct NetworkSpec {
    int version = 1;
    SchemeSpec scheme;
    TensorShape input_shape;
    std::vector<LayerSpec> layers;

    TensorShape output_shape() const { return layers.empty() ? input_shape : layers.back().out_shape; }
};

// Composes shapes, names layers (conv1, square1, fc1, ...; ffconv layers
// share the conv counter) and checks every dense payload against N.
// Errors name the offending layer by index and name.
void validate_network(NetworkSpec& net);

// JSON text with fields version, scheme {N, t, rotation_weight},
// input_shape {w, h, c} and layers [{kind, d, stride, out_channels, rank,
// packing_hint}]. Unknown keys are rejected. `origin` prefixes messages.
NetworkSpec parse_network(std::string_view text, std::string_view origin = "network");
NetworkSpec load_network(const std::string& path);
std::string network_to_json(const NetworkSpec& net);

// Cryptosystem settings of the reference models.
struct Preset {
    std::string name;
    std::size_t slot_count;
    std::vector<std::string> t_factors;
};
const std::vector<Preset>& presets();
// Throws std::invalid_argument listing the known names.
const Preset& find_preset(std::string_view name);
void apply_preset(NetworkSpec& net, const Preset& preset);

// tinynet, ffconv-tinynet, widenet, ffconv-widenet, each with its preset.
std::vector<std::string> builtin_network_names();
std::optional<NetworkSpec> builtin_network(std::string_view name);
// A built-in name or a path to a network file.
NetworkSpec resolve_network(const std::string& name_or_path);

}  // namespace ffconv::runner
