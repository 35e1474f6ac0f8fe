// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffconv/runner/weights_io.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ffconv/common/error.h"
#include "json.hpp"

namespace ffconv::runner {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct TensorDesc {
    std::string name;
    std::vector<std::size_t> shape;
};

std::vector<TensorDesc> expected_tensors(const LayerSpec& l) {
    const std::size_t in_c = l.in_shape.c;
    switch (l.kind) {
        case LayerKind::kConv:
            return {{"w", {l.d, l.d, in_c, l.out_channels}}, {"b", {l.out_channels}}};
        case LayerKind::kFfconv:
            return {{"w1", {l.d, l.d, in_c, l.rank}}, {"w2", {1, 1, l.rank, l.out_channels}}, {"b", {l.out_channels}}};
        case LayerKind::kFc:
            return {{"w", {l.in_shape.size(), l.out_channels}}, {"b", {l.out_channels}}};
        default:
            return {};
    }
}

std::string label(std::size_t i, const LayerSpec& l) { return "layer " + std::to_string(i) + " (" + l.name + ")"; }

std::size_t product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t s : shape) {
        n *= s;
    }
    return n;
}

int bits_for(i128 max_abs) {
    int bits = 2;
    while (bits < 32 && (static_cast<i128>(1) << (bits - 1)) - 1 < max_abs) {
        ++bits;
    }
    return bits;
}

std::string format_scale(double s) {
    std::ostringstream os;
    os.precision(17);
    os << s;
    return os.str();
}

// Matrix entries in file order for tensor `name` of layer l.
std::vector<i128> file_order(const LayerSpec& l, const IntMatrix& m, std::size_t d) {
    if (l.kind == LayerKind::kFc) {
        return m.data();
    }
    return engine::matrix_to_filter(m, d).data();
}

IntMatrix from_file_order(const LayerSpec& l, const std::vector<std::size_t>& shape, std::vector<i128> data) {
    if (l.kind == LayerKind::kFc) {
        return IntMatrix(shape[0], shape[1], std::move(data));
    }
    return engine::filter_to_matrix(IntFilter(shape[0], shape[2], shape[3], std::move(data)));
}

fs::path manifest_path(const std::string& path) {
    fs::path p(path);
    if (p.extension() == ".bin") {
        p.replace_extension(".json");
    }
    return p;
}

}  // namespace

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file_atomic(const std::string& path, std::string_view bytes) {
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
    }
}

NetworkWeights random_weights(const NetworkSpec& net, std::uint64_t seed, int magnitude) {
    if (magnitude < 0) {
        throw std::invalid_argument("weight magnitude must be nonnegative");
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dist(-magnitude, magnitude);
    const int bits = bits_for(magnitude);
    auto matrix = [&](std::size_t rows, std::size_t cols) {
        IntMatrix m(rows, cols);
        for (auto& v : m.data()) {
            v = dist(rng);
        }
        return engine::WeightMatrix{std::move(m), bits, 1.0};
    };
    NetworkWeights w;
    for (const LayerSpec& l : net.layers) {
        LayerWeights lw;
        switch (l.kind) {
            case LayerKind::kConv:
                lw.w = matrix(l.kernel().patch_size(l.in_shape), l.out_channels);
                break;
            case LayerKind::kFfconv:
                lw.pair.w1 = matrix(KernelSpec{l.d, l.stride, l.rank}.patch_size(l.in_shape), l.rank);
                lw.pair.w2 = matrix(l.rank, l.out_channels);
                break;
            case LayerKind::kFc:
                lw.w = matrix(l.in_shape.size(), l.out_channels);
                break;
            default:
                break;
        }
        if (l.has_weights()) {
            for (std::size_t o = 0; o < l.out_channels; ++o) {
                lw.bias.entries.push_back(dist(rng));
            }
        }
        w.layers.push_back(std::move(lw));
    }
    return w;
}

void check_weights(const NetworkSpec& net, const NetworkWeights& weights) {
    if (weights.layers.size() != net.layers.size()) {
        throw WeightDataError(0, "weights hold " + std::to_string(weights.layers.size()) + " layers, network has " +
                                     std::to_string(net.layers.size()));
    }
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        const LayerWeights& lw = weights.layers[i];
        auto expect = [&](const engine::WeightMatrix& m, std::size_t rows, std::size_t cols, const char* what) {
            if (m.k() != rows || m.out_channels() != cols) {
                throw WeightDataError(i, label(i, l) + ": " + what + " is " + std::to_string(m.k()) + "x" +
                                             std::to_string(m.out_channels()) + ", expected " +
                                             std::to_string(rows) + "x" + std::to_string(cols));
            }
        };
        switch (l.kind) {
            case LayerKind::kConv:
                expect(lw.w, l.kernel().patch_size(l.in_shape), l.out_channels, "w");
                break;
            case LayerKind::kFfconv:
                expect(lw.pair.w1, KernelSpec{l.d, l.stride, l.rank}.patch_size(l.in_shape), l.rank, "w1");
                expect(lw.pair.w2, l.rank, l.out_channels, "w2");
                break;
            case LayerKind::kFc:
                expect(lw.w, l.in_shape.size(), l.out_channels, "w");
                break;
            default:
                break;
        }
        if (l.has_weights() && lw.bias.size() != l.out_channels) {
            throw WeightDataError(i, label(i, l) + ": bias has " + std::to_string(lw.bias.size()) +
                                         " entries, expected " + std::to_string(l.out_channels));
        }
    }
}

void save_weights(const NetworkSpec& net, const NetworkWeights& weights, const std::string& base) {
    check_weights(net, weights);
    fs::path stem(base);
    if (stem.extension() == ".json" || stem.extension() == ".bin") {
        stem.replace_extension();
    }
    fs::path json_path = stem;
    json_path += ".json";
    fs::path bin_path = stem;
    bin_path += ".bin";

    std::string blob;
    std::size_t offset = 0;
    nlohmann::ordered_json layers = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        if (!l.has_weights()) {
            continue;
        }
        const LayerWeights& lw = weights.layers[i];
        nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
        for (const TensorDesc& t : expected_tensors(l)) {
            std::vector<i128> data;
            int bits = 0;
            double scale = 1.0;
            if (t.name == "b") {
                data = lw.bias.entries;
                bits = bits_for(lw.bias.max_abs());
                scale = l.kind == LayerKind::kFfconv ? lw.pair.w1.scale * lw.pair.w2.scale : lw.w.scale;
            } else {
                const engine::WeightMatrix& m = t.name == "w1" ? lw.pair.w1 : t.name == "w2" ? lw.pair.w2 : lw.w;
                data = file_order(l, m.entries, t.name == "w2" ? 1 : l.d);
                bits = m.bits;
                scale = m.scale;
            }
            for (i128 v : data) {
                if (v > std::numeric_limits<std::int32_t>::max() || v < std::numeric_limits<std::int32_t>::min()) {
                    throw WeightDataError(i, label(i, l) + ": entry of " + t.name + " does not fit int32");
                }
                const auto u = static_cast<std::uint32_t>(static_cast<std::int32_t>(v));
                for (int b = 0; b < 4; ++b) {
                    blob.push_back(static_cast<char>((u >> (8 * b)) & 0xFF));
                }
            }
            nlohmann::ordered_json tj;
            tj["name"] = t.name;
            tj["shape"] = t.shape;
            tj["bits"] = bits;
            tj["scale"] = format_scale(scale);
            tj["offset"] = offset;
            tj["count"] = data.size();
            offset += data.size();
            tensors.push_back(tj);
        }
        nlohmann::ordered_json lj;
        lj["name"] = l.name;
        lj["kind"] = kind_name(l.kind);
        lj["tensors"] = tensors;
        layers.push_back(lj);
    }
    nlohmann::ordered_json doc;
    doc["version"] = 1;
    doc["data"] = bin_path.filename().string();
    doc["layers"] = layers;
    write_file_atomic(bin_path.string(), blob);
    write_file_atomic(json_path.string(), doc.dump(2) + "\n");
}

NetworkWeights load_weights(const NetworkSpec& net, const std::string& path) {
    const fs::path mpath = manifest_path(path);
    Json doc;
    try {
        doc = Json::parse(read_file(mpath.string()));
    } catch (const Json::parse_error& e) {
        throw SchemaError(mpath.string() + ": " + e.what());
    }
    const std::string where = mpath.string();
    auto reject_unknown = [](const Json& obj, const std::set<std::string>& allowed, const std::string& at) {
        if (!obj.is_object()) {
            throw SchemaError(at + ": expected an object");
        }
        for (const auto& [key, value] : obj.items()) {
            if (allowed.count(key) == 0) {
                throw SchemaError(at + ": unknown key '" + key + "'");
            }
        }
    };
    reject_unknown(doc, {"version", "data", "layers"}, where);
    if (!doc.contains("version") || !doc["version"].is_number_integer() || doc["version"].get<int>() != 1) {
        throw SchemaError(where + ": 'version' must be 1");
    }
    if (!doc.contains("data") || !doc["data"].is_string()) {
        throw SchemaError(where + ": missing 'data' file name");
    }
    if (!doc.contains("layers") || !doc["layers"].is_array()) {
        throw SchemaError(where + ": missing 'layers' array");
    }
    const fs::path data_path = mpath.parent_path() / doc["data"].get<std::string>();
    const std::string blob = read_file(data_path.string());
    const std::size_t entries = blob.size() / 4;
    auto entry = [&](std::size_t k) {
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b) {
            u |= static_cast<std::uint32_t>(static_cast<unsigned char>(blob[4 * k + b])) << (8 * b);
        }
        return static_cast<i128>(static_cast<std::int32_t>(u));
    };

    std::map<std::string, const Json*> by_name;
    for (const Json& lj : doc["layers"]) {
        reject_unknown(lj, {"name", "kind", "tensors"}, where + ": layer entry");
        if (!lj.contains("name") || !lj["name"].is_string()) {
            throw SchemaError(where + ": layer entry without a name");
        }
        by_name[lj["name"].get<std::string>()] = &lj;
    }
    std::set<std::string> used;

    NetworkWeights out;
    std::size_t furthest = 0;
    std::size_t furthest_layer = 0;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        LayerWeights lw;
        if (!l.has_weights()) {
            out.layers.push_back(std::move(lw));
            continue;
        }
        const std::string at = label(i, l);
        const auto it = by_name.find(l.name);
        if (it == by_name.end()) {
            throw WeightDataError(i, at + ": no weights in " + where);
        }
        used.insert(l.name);
        const Json& lj = *it->second;
        if (!lj.contains("kind") || lj["kind"] != std::string(kind_name(l.kind))) {
            throw WeightDataError(i, at + ": weight entry kind does not match the network");
        }
        if (!lj.contains("tensors") || !lj["tensors"].is_array()) {
            throw SchemaError(where + ": " + at + " has no 'tensors' array");
        }
        std::map<std::string, const Json*> tensors;
        for (const Json& tj : lj["tensors"]) {
            reject_unknown(tj, {"name", "shape", "bits", "scale", "offset", "count"}, where + ": " + at + " tensor");
            if (!tj.contains("name") || !tj["name"].is_string()) {
                throw SchemaError(where + ": " + at + " tensor without a name");
            }
            tensors[tj["name"].get<std::string>()] = &tj;
        }
        const std::vector<TensorDesc> expected = expected_tensors(l);
        if (tensors.size() != expected.size()) {
            throw WeightDataError(i, at + ": expected " + std::to_string(expected.size()) + " tensors, found " +
                                         std::to_string(tensors.size()));
        }
        for (const TensorDesc& t : expected) {
            const auto tit = tensors.find(t.name);
            if (tit == tensors.end()) {
                throw WeightDataError(i, at + ": missing tensor '" + t.name + "'");
            }
            const Json& tj = *tit->second;
            std::vector<std::size_t> shape;
            int bits = 0;
            double scale = 0;
            std::size_t offset = 0;
            std::size_t count = 0;
            try {
                shape = tj.at("shape").get<std::vector<std::size_t>>();
                bits = tj.at("bits").get<int>();
                const std::string s = tj.at("scale").get<std::string>();
                std::size_t used_chars = 0;
                scale = std::stod(s, &used_chars);
                if (used_chars != s.size()) {
                    throw std::invalid_argument("trailing characters in scale");
                }
                offset = tj.at("offset").get<std::size_t>();
                count = tj.at("count").get<std::size_t>();
            } catch (const std::exception& e) {
                throw SchemaError(where + ": " + at + " tensor '" + t.name + "': " + e.what());
            }
            if (shape != t.shape) {
                std::string got;
                for (std::size_t s : shape) {
                    got += (got.empty() ? "" : ",") + std::to_string(s);
                }
                throw WeightDataError(i, at + ": tensor '" + t.name + "' has shape [" + got +
                                             "], which does not fit the network");
            }
            if (bits < 2 || bits > 32) {
                throw WeightDataError(i, at + ": tensor '" + t.name + "' declares " + std::to_string(bits) +
                                             " bits; supported range is 2..32");
            }
            if (!std::isfinite(scale) || scale <= 0) {
                throw WeightDataError(i, at + ": tensor '" + t.name + "' has a non-positive scale");
            }
            if (count != product(shape)) {
                throw WeightDataError(i, at + ": tensor '" + t.name + "' count " + std::to_string(count) +
                                             " does not match its shape");
            }
            if (offset + count > entries) {
                throw WeightDataError(i, at + ": tensor '" + t.name + "' reaches past the end of " +
                                             data_path.string() + " (" + std::to_string(entries) + " entries)");
            }
            if (offset + count >= furthest) {
                furthest = offset + count;
                furthest_layer = i;
            }
            const i128 hi = (static_cast<i128>(1) << (bits - 1)) - 1;
            const i128 lo = -(static_cast<i128>(1) << (bits - 1));
            std::vector<i128> data(count);
            for (std::size_t k = 0; k < count; ++k) {
                data[k] = entry(offset + k);
                if (data[k] < lo || data[k] > hi) {
                    throw WeightDataError(i, at + ": tensor '" + t.name + "' entry " + std::to_string(k) + " = " +
                                                 to_string(data[k]) + " is outside the declared " +
                                                 std::to_string(bits) + "-bit range");
                }
            }
            if (t.name == "b") {
                lw.bias.entries = std::move(data);
            } else {
                engine::WeightMatrix m{from_file_order(l, shape, std::move(data)), bits, scale};
                if (t.name == "w1") {
                    lw.pair.w1 = std::move(m);
                } else if (t.name == "w2") {
                    lw.pair.w2 = std::move(m);
                } else {
                    lw.w = std::move(m);
                }
            }
        }
        out.layers.push_back(std::move(lw));
    }
    for (const auto& [name, lj] : by_name) {
        if (used.count(name) == 0) {
            throw SchemaError(where + ": weights for unknown layer '" + name + "'");
        }
    }
    if (blob.size() % 4 != 0) {
        throw WeightDataError(furthest_layer, label(furthest_layer, net.layers[furthest_layer]) + ": " +
                                                  data_path.string() + " has a truncated trailing entry");
    }
    check_weights(net, out);
    return out;
}

}  // namespace ffconv::runner
