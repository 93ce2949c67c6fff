// SPDX-License-Identifier: Apache-2.0
//
// risloc: RIS-assisted user localization with 1-bit uplink power control
// Copyright (C) 2026 The risloc authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "risloc/agents.hpp"
#include "risloc/rollout.hpp"
#include "risloc/tensor_nn.hpp"

#include <optional>
#include <vector>

namespace risloc {

struct SupervisedConfig {
    int epochs = 30;
    int batch_size = 256;
    double learning_rate = 1e-3;
    double validation_fraction = 0.05;
};

/// Whole dataset in network layout: steps[t] is input_dim x N, targets 3 x N
/// in normalized coordinates.
struct TrainingData {
    nn::SequenceBatch steps;
    nn::Matrix targets;

    Eigen::Index size() const { return targets.cols(); }
};

/// One LSTM step per frame.
TrainingData sequence_data(const std::vector<Episode>& episodes, const AgentSetup& setup);
/// One flattened step per episode: [enc(y(1)), ..., enc(y(T))].
TrainingData flattened_data(const std::vector<Episode>& episodes, const AgentSetup& setup);

nn::Vector flatten_observations(const Episode& episode, const AgentSetup& setup);

struct TrainingReport {
    nn::ParamVector params; // best validation epoch
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    int best_epoch = 0;
    double best_val_loss = 0.0;
};

/// Minibatch Adam on MSE. A seeded permutation holds out the validation
/// split; the parameters of the best validation epoch are returned. Throws
/// nn::NumericalError on divergence.
TrainingReport train_supervised(const nn::ArchitectureSpec& spec, const TrainingData& data,
                                const SupervisedConfig& config, std::uint64_t seed,
                                const std::optional<nn::ParamVector>& warm_start = std::nullopt);

} // namespace risloc
