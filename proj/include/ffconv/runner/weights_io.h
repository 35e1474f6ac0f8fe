// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

// Quantized weight files: a JSON manifest <base>.json describing each
// tensor and a little-endian int32 blob <base>.bin holding the entries.
//
//   {"version": 1, "data": "<base>.bin",
//    "layers": [{"name": "conv1", "kind": "conv", "tensors": [
//       {"name": "w", "shape": [d, d, I, O], "bits": 8, "scale": "0.0123",
//        "offset": 0, "count": 1152}, ...]}]}
//
// conv: w [d, d, I, O] (HWIO) and b [O]. ffconv: w1 [d, d, I, r],
// w2 [1, 1, r, O] and b [O]. fc: w [I, O] with I in dense CHW order, and
// b [O]. Offsets and counts are in int32 entries. Biases are integers on
// the scale of the layer's products.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ffconv/engine/weights.h"
#include "ffconv/runner/network.h"

namespace ffconv::runner {

struct LayerWeights {
    engine::WeightMatrix w;     // conv and fc: K x O_c
    engine::QuantizedPair pair; // ffconv
    engine::BiasVector bias;    // empty for layers without weights
};

// One entry per network layer; layers without weights hold empty entries.
struct NetworkWeights {
    std::vector<LayerWeights> layers;
};

// Entries uniform in [-magnitude, magnitude], biases likewise, scale 1.
NetworkWeights random_weights(const NetworkSpec& net, std::uint64_t seed, int magnitude = 1);

// Throws WeightDataError naming the first layer whose matrices do not fit
// the network.
void check_weights(const NetworkSpec& net, const NetworkWeights& weights);

// Writes <base>.json and <base>.bin. `base` may also end in .json or .bin.
void save_weights(const NetworkSpec& net, const NetworkWeights& weights, const std::string& base);

// Reads a manifest (a path ending in .bin is mapped to the .json beside
// it). Malformed JSON raises SchemaError; a blob that is truncated, an entry
// outside its declared bit width or a tensor that does not fit the network
// raises WeightDataError with the layer index.
NetworkWeights load_weights(const NetworkSpec& net, const std::string& path);

// Writes through a temporary file in the same directory and renames it.
void write_file_atomic(const std::string& path, std::string_view bytes);
std::string read_file(const std::string& path);

}  // namespace ffconv::runner
