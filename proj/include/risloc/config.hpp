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

// Experiment configuration. Files are JSON objects; every key is optional
// and falls back to the selected preset ("paper" unless the file or the
// caller picks "desk"). Powers are given in dBm and converted to watts here.

#include "risloc/agents.hpp"
#include "risloc/channel.hpp"
#include "risloc/cosyne.hpp"
#include "risloc/rollout.hpp"
#include "risloc/supervised.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace risloc {

/// Validation failure; `field` is the dotted path of the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field))
    {
    }
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct FingerprintConfig {
    int samples_per_block = 5;
    int k = 5;
    bool average_samples = false;  // store one averaged fingerprint per block
    bool db_uniform_power = true;  // else every survey frame at P_max
    bool query_uniform_power = true;
};

struct TrainingPlan {
    int stage1_size = 50000;
    int stage3_size = 50000;
    int supervised_size = 70000;
    SupervisedConfig supervised;
    int eval_episodes = 1000;
    bool warm_start = false;
    DecodeMode eval_decode = DecodeMode::Argmax;
    int checkpoint_every = 10;
    cosyne::NEConfig ne;
    std::vector<int> sweep_n_ris;
    std::vector<double> sweep_noise_dbm;
    std::vector<ObservationFormat> sweep_formats;
    std::vector<std::string> sweep_methods;
};

struct ExperimentConfig {
    std::string preset = "paper";
    ScenarioGeometry geometry;
    std::optional<double> element_spacing_m; // lambda/2 when unset
    ChannelParams channel;                    // max_power_watt derived from max_power_dbm
    double max_power_dbm = 30.0;
    std::optional<double> initial_power_dbm; // P_max when unset
    std::optional<double> power_budget_w;    // 0.5 * T * P_max when unset
    std::vector<double> phase_values{0.0, 1.0};
    RolloutConfig rollout;
    NetworkSizes sizes;
    TrainingPlan plan;
    FingerprintConfig fingerprint;
    std::uint64_t seed = 0;
    std::string output_dir = "runs";

    Scenario scenario() const;
    AgentSetup agent_setup() const;
    /// Canonical JSON of every resolved setting except output_dir.
    std::string canonical_json() const;
    /// 16 hex digits naming the run directory.
    std::string hash() const;

    /// Copy with a different RIS size / noise level / observation format.
    ExperimentConfig with_point(int n_ris, double noise_dbm, ObservationFormat format) const;

    /// Recomputes every derived quantity (watts, spacing, budget, RIS grid).
    void resolve();
};

/// Methods understood by the sweep.
const std::vector<std::string>& known_methods();

ExperimentConfig preset_config(const std::string& name);

/// An empty or whitespace-only text yields the preset unchanged.
ExperimentConfig parse_config_text(const std::string& text, const std::optional<std::string>& preset = std::nullopt);
ExperimentConfig parse_config(const std::filesystem::path& path,
                              const std::optional<std::string>& preset = std::nullopt);

/// Throws ConfigError on any constraint violation.
void validate_config(const ExperimentConfig& config);

} // namespace risloc
