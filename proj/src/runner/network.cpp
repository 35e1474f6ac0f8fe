// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffconv/runner/network.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ffconv/common/error.h"
#include "json.hpp"

namespace ffconv::runner {

using Json = nlohmann::json;

namespace {

std::string layer_label(std::size_t i, const LayerSpec& l) {
    std::string label = "layer " + std::to_string(i);
    if (!l.name.empty()) {
        label += " (" + l.name + ")";
    } else {
        label += " (" + std::string(kind_name(l.kind)) + ")";
    }
    return label;
}

void reject_unknown(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) {
        throw SchemaError(where + ": expected an object");
    }
    for (const auto& [key, value] : obj.items()) {
        if (allowed.count(key) == 0) {
            throw SchemaError(where + ": unknown key '" + key + "'");
        }
    }
}

std::size_t get_size(const Json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) {
        throw SchemaError(where + ": missing '" + key + "'");
    }
    const Json& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw SchemaError(where + ": '" + key + "' must be a nonnegative integer");
    }
    return v.get<std::size_t>();
}

std::vector<std::string> parse_t(const Json& v, const std::string& where) {
    std::vector<std::string> factors;
    if (v.is_string()) {
        factors.push_back(v.get<std::string>());
    } else if (v.is_number_unsigned()) {
        factors.push_back(std::to_string(v.get<std::uint64_t>()));
    } else if (v.is_array() && !v.empty()) {
        for (const Json& f : v) {
            if (f.is_string()) {
                factors.push_back(f.get<std::string>());
            } else if (f.is_number_unsigned()) {
                factors.push_back(std::to_string(f.get<std::uint64_t>()));
            } else {
                throw SchemaError(where + ": 't' factors must be decimal strings");
            }
        }
    } else {
        throw SchemaError(where + ": 't' must be a decimal string or a list of factors");
    }
    return factors;
}

u128 t_product(const std::vector<std::string>& factors, const std::string& where) {
    try {
        return parse_u128_product(factors);
    } catch (const std::exception& e) {
        throw SchemaError(where + ": bad 't': " + e.what());
    }
}

}  // namespace

std::string_view kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::kConv:
            return "conv";
        case LayerKind::kFfconv:
            return "ffconv";
        case LayerKind::kFc:
            return "fc";
        case LayerKind::kSquare:
            return "square";
        case LayerKind::kAvgPool:
            return "avgpool";
    }
    return "?";
}

LayerKind parse_kind(std::string_view name) {
    for (LayerKind k : {LayerKind::kConv, LayerKind::kFfconv, LayerKind::kFc, LayerKind::kSquare,
                        LayerKind::kAvgPool}) {
        if (kind_name(k) == name) {
            return k;
        }
    }
    throw SchemaError("unknown layer kind '" + std::string(name) + "' (expected conv, ffconv, fc, square, avgpool)");
}

he::SchemeParams SchemeSpec::params() const {
    he::SchemeParams p;
    p.slot_count = slot_count;
    p.plain_modulus = plain_modulus;
    p.rotation_weight = rotation_weight;
    return p;
}

void validate_network(NetworkSpec& net) {
    if (net.version != 1) {
        throw SchemaError("unsupported network version " + std::to_string(net.version));
    }
    try {
        net.scheme.params().validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(std::string("scheme: ") + e.what());
    }
    const std::size_t n = net.scheme.slot_count;
    if (net.input_shape.size() == 0) {
        throw ShapeError("input_shape must be positive in every dimension");
    }
    if (net.input_shape.size() > n) {
        throw CapacityError("input " + net.input_shape.str() + " needs " + std::to_string(net.input_shape.size()) +
                            " slots but N=" + std::to_string(n));
    }
    std::map<std::string, int> counters;
    TensorShape cur = net.input_shape;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        LayerSpec& l = net.layers[i];
        const std::string base = l.kind == LayerKind::kFfconv  ? "conv"
                                 : l.kind == LayerKind::kAvgPool ? "pool"
                                                                 : std::string(kind_name(l.kind));
        l.name = base + std::to_string(++counters[base]);
        const std::string label = layer_label(i, l);
        l.in_shape = cur;
        try {
            switch (l.kind) {
                case LayerKind::kConv:
                case LayerKind::kFfconv: {
                    if (l.out_channels == 0) {
                        throw ShapeError("out_channels must be positive");
                    }
                    const KernelSpec k = l.kernel();
                    k.validate(cur);
                    l.out_shape = k.output_shape(cur);
                    if (l.kind == LayerKind::kFfconv) {
                        const std::size_t cap = std::min(k.patch_size(cur), l.out_channels);
                        if (l.rank < 1 || l.rank > cap) {
                            throw ShapeError("rank " + std::to_string(l.rank) + " outside [1, " +
                                             std::to_string(cap) + "]");
                        }
                        const std::size_t mid = l.out_shape.spatial() * l.rank;
                        if (mid > n) {
                            throw CapacityError("factor output needs " + std::to_string(mid) + " slots but N=" +
                                                std::to_string(n));
                        }
                    } else if (l.rank != 0) {
                        throw SchemaError("'rank' is only valid on ffconv layers");
                    }
                    break;
                }
                case LayerKind::kFc:
                    if (l.out_channels == 0) {
                        throw ShapeError("out_channels must be positive");
                    }
                    l.out_shape = {1, 1, l.out_channels};
                    break;
                case LayerKind::kSquare:
                    l.out_shape = cur;
                    break;
                case LayerKind::kAvgPool: {
                    const KernelSpec k{l.d, l.stride, cur.c};
                    k.validate(cur);
                    l.out_shape = {k.out_w(cur), k.out_h(cur), cur.c};
                    break;
                }
            }
        } catch (const CapacityError& e) {
            throw CapacityError(label + ": " + e.what());
        } catch (const ShapeError& e) {
            throw ShapeError(label + ": " + e.what());
        } catch (const SchemaError& e) {
            throw SchemaError(label + ": " + e.what());
        }
        if (l.out_shape.size() > n) {
            throw CapacityError(label + ": output " + l.out_shape.str() + " needs " +
                                std::to_string(l.out_shape.size()) + " slots but N=" + std::to_string(n));
        }
        cur = l.out_shape;
    }
}

NetworkSpec parse_network(std::string_view text, std::string_view origin) {
    const std::string where(origin);
    Json doc;
    try {
        doc = Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        throw SchemaError(where + ": invalid JSON: " + e.what());
    }
    reject_unknown(doc, {"version", "scheme", "input_shape", "layers"}, where);
    NetworkSpec net;
    try {
        if (!doc.contains("version") || !doc.at("version").is_number_integer()) {
            throw SchemaError(where + ": 'version' must be an integer");
        }
        net.version = doc.at("version").get<int>();
        if (!doc.contains("scheme")) {
            throw SchemaError(where + ": missing 'scheme'");
        }
        const Json& scheme = doc.at("scheme");
        reject_unknown(scheme, {"N", "t", "rotation_weight"}, where + ": scheme");
        net.scheme.slot_count = get_size(scheme, "N", where + ": scheme");
        if (!scheme.contains("t")) {
            throw SchemaError(where + ": scheme: missing 't'");
        }
        net.scheme.t_factors = parse_t(scheme.at("t"), where + ": scheme");
        net.scheme.plain_modulus = t_product(net.scheme.t_factors, where + ": scheme");
        if (scheme.contains("rotation_weight")) {
            if (!scheme.at("rotation_weight").is_number()) {
                throw SchemaError(where + ": scheme: 'rotation_weight' must be a number");
            }
            net.scheme.rotation_weight = scheme.at("rotation_weight").get<double>();
        }
        if (!doc.contains("input_shape")) {
            throw SchemaError(where + ": missing 'input_shape'");
        }
        const Json& in = doc.at("input_shape");
        reject_unknown(in, {"w", "h", "c"}, where + ": input_shape");
        net.input_shape = {get_size(in, "w", where + ": input_shape"), get_size(in, "h", where + ": input_shape"),
                           get_size(in, "c", where + ": input_shape")};
        if (!doc.contains("layers") || !doc.at("layers").is_array()) {
            throw SchemaError(where + ": 'layers' must be a list");
        }
        std::size_t i = 0;
        for (const Json& lj : doc.at("layers")) {
            const std::string lw = where + ": layer " + std::to_string(i);
            reject_unknown(lj, {"kind", "d", "stride", "out_channels", "rank", "packing_hint"}, lw);
            if (!lj.contains("kind") || !lj.at("kind").is_string()) {
                throw SchemaError(lw + ": missing 'kind'");
            }
            LayerSpec l;
            try {
                l.kind = parse_kind(lj.at("kind").get<std::string>());
            } catch (const SchemaError& e) {
                throw SchemaError(lw + ": " + e.what());
            }
            const std::string lk = lw + " (" + std::string(kind_name(l.kind)) + ")";
            auto forbid = [&](const char* key) {
                if (lj.contains(key)) {
                    throw SchemaError(lk + ": '" + key + "' is not valid for this kind");
                }
            };
            switch (l.kind) {
                case LayerKind::kConv:
                case LayerKind::kFfconv:
                    l.d = get_size(lj, "d", lk);
                    l.out_channels = get_size(lj, "out_channels", lk);
                    l.stride = lj.contains("stride") ? get_size(lj, "stride", lk) : 1;
                    if (l.kind == LayerKind::kFfconv) {
                        l.rank = get_size(lj, "rank", lk);
                    } else {
                        forbid("rank");
                    }
                    break;
                case LayerKind::kFc:
                    l.out_channels = get_size(lj, "out_channels", lk);
                    forbid("d");
                    forbid("stride");
                    forbid("rank");
                    break;
                case LayerKind::kSquare:
                    forbid("d");
                    forbid("stride");
                    forbid("rank");
                    forbid("out_channels");
                    break;
                case LayerKind::kAvgPool:
                    l.d = get_size(lj, "d", lk);
                    l.stride = lj.contains("stride") ? get_size(lj, "stride", lk) : 1;
                    forbid("rank");
                    forbid("out_channels");
                    break;
            }
            if (lj.contains("packing_hint")) {
                if (!lj.at("packing_hint").is_string()) {
                    throw SchemaError(lk + ": 'packing_hint' must be a string");
                }
                l.packing_hint = lj.at("packing_hint").get<std::string>();
            }
            net.layers.push_back(std::move(l));
            ++i;
        }
    } catch (const Json::exception& e) {
        throw SchemaError(where + ": " + e.what());
    }
    validate_network(net);
    return net;
}

NetworkSpec load_network(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open network file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_network(buf.str(), path);
}

std::string network_to_json(const NetworkSpec& net) {
    nlohmann::ordered_json doc;
    doc["version"] = net.version;
    nlohmann::ordered_json scheme;
    scheme["N"] = net.scheme.slot_count;
    if (net.scheme.t_factors.size() == 1) {
        scheme["t"] = net.scheme.t_factors[0];
    } else {
        scheme["t"] = net.scheme.t_factors;
    }
    scheme["rotation_weight"] = net.scheme.rotation_weight;
    doc["scheme"] = scheme;
    doc["input_shape"] = {{"w", net.input_shape.w}, {"h", net.input_shape.h}, {"c", net.input_shape.c}};
    nlohmann::ordered_json layers = nlohmann::ordered_json::array();
    for (const LayerSpec& l : net.layers) {
        nlohmann::ordered_json lj;
        lj["kind"] = kind_name(l.kind);
        switch (l.kind) {
            case LayerKind::kConv:
            case LayerKind::kFfconv:
                lj["d"] = l.d;
                lj["stride"] = l.stride;
                lj["out_channels"] = l.out_channels;
                if (l.kind == LayerKind::kFfconv) {
                    lj["rank"] = l.rank;
                }
                break;
            case LayerKind::kFc:
                lj["out_channels"] = l.out_channels;
                break;
            case LayerKind::kSquare:
                break;
            case LayerKind::kAvgPool:
                lj["d"] = l.d;
                lj["stride"] = l.stride;
                break;
        }
        if (!l.packing_hint.empty()) {
            lj["packing_hint"] = l.packing_hint;
        }
        layers.push_back(lj);
    }
    doc["layers"] = layers;
    return doc.dump(2) + "\n";
}

}  // namespace ffconv::runner
