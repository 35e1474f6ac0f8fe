// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

// Exact operation counts of the engine's schedules, stage by stage, derived
// from shapes alone. Stage names match what the engine logs.

#pragma once

#include <string>
#include <vector>

#include "ffconv/engine/engine.h"
#include "ffconv/engine/stage_log.h"

namespace ffconv::cost {

using Stages = std::vector<engine::Stage>;

enum class Layout { kDense, kChannel, kColumns };

// r rotations and r additions.
he::OpCounters rotate_and_sum_ops(int log2_span);

he::OpCounters h_im2col_ops(const TensorShape& in, const KernelSpec& kernel, Layout from);
he::OpCounters h_grouping_from_dense_ops(std::size_t channels);
he::OpCounters combine_ops(std::size_t pieces);
// Conversions done by engine::to_dense / engine::to_conv.
he::OpCounters to_dense_ops(const TensorShape& shape, Layout from);
he::OpCounters to_conv_ops(const TensorShape& shape, const KernelSpec& kernel, Layout from);

Stages conv_dense_stages(const TensorShape& in, const KernelSpec& kernel, engine::Assembly assembly, bool bias,
                         std::size_t slot_count, const std::string& prefix = "");
Stages conv_conv_stages(std::size_t k, std::size_t out_channels, bool bias, const std::string& prefix = "");
Stages conv_conv_replicated_stages(std::size_t k, bool bias, const std::string& prefix = "");
// `from` is the layout handed to ffconv_layer.
Stages ffconv_stages(const TensorShape& in, Layout from, const KernelSpec& kernel, std::size_t rank,
                     engine::Pattern pattern, bool bias, std::size_t slot_count, const std::string& prefix = "");
Stages fc_stages(std::size_t inputs, std::size_t outputs, bool mask_outputs, bool bias,
                 const std::string& prefix = "");
Stages avg_pool_stages(const TensorShape& in, Layout from, const KernelSpec& window, std::size_t slot_count,
                       const std::string& prefix = "");
Stages square_stages(std::size_t ciphertexts, const std::string& prefix = "");

he::OpCounters total(const Stages& stages);

}  // namespace ffconv::cost
