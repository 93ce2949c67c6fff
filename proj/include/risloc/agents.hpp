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

// The three learned components: the BS policy (RIS profile + feedback bit),
// the UE power network driven only by feedback bits, and the position
// estimator. A single-agent policy variant that emits the power level
// directly is kept here as well since it shares the policy trunk.

#include "risloc/channel.hpp"
#include "risloc/tensor_nn.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace risloc {

enum class ObservationFormat { Stacked, Rss };
enum class DecodeMode { Sample, Argmax };

int observation_dim(ObservationFormat format);
std::string to_string(ObservationFormat format);
std::string to_string(DecodeMode mode);

/// stacked -> [Re y, Im y]; rss -> [|y|^2].
nn::Vector observation_encode(cplx y, ObservationFormat format);

/// 0 requests a power reduction, 1 a boost.
class FeedbackBit {
public:
    constexpr FeedbackBit() = default;
    explicit FeedbackBit(int value);

    constexpr std::uint8_t value() const { return value_; }
    friend bool operator==(FeedbackBit, FeedbackBit) = default;

private:
    std::uint8_t value_ = 0;
};

/// tanh then sign; sign(0) is taken as +1 so the zero case maps to bit 1.
FeedbackBit decode_bit(double preactivation);

/// Hidden-layer widths of every network. Output layers are implied.
struct NetworkSizes {
    std::vector<int> lstm_hidden;
    std::vector<int> policy_ris_hidden;
    std::vector<int> policy_bit_hidden;
    std::vector<int> power_hidden;
    std::vector<int> estimator_hidden;
    std::vector<int> supervised_hidden;

    static NetworkSizes paper();
    static NetworkSizes desk();
};

nn::ArchitectureSpec policy_architecture(const NetworkSizes& sizes, int n_ris, int phase_count,
                                         ObservationFormat format);
nn::ArchitectureSpec power_architecture(const NetworkSizes& sizes);
nn::ArchitectureSpec estimator_architecture(const NetworkSizes& sizes, ObservationFormat format);
/// Same trunk and RIS head as the policy; the second head yields a power preactivation.
nn::ArchitectureSpec single_agent_architecture(const NetworkSizes& sizes, int n_ris, int phase_count,
                                               ObservationFormat format);
/// Plain MLP on the flattened observation sequence (2T or T inputs).
nn::ArchitectureSpec supervised_architecture(const NetworkSizes& sizes, int horizon, ObservationFormat format);

/// Maps positions to the estimator's normalized output coordinates and back.
/// Scale per axis is max(half-width, 1 m).
struct PositionScaler {
    Position center;
    double scale_x = 1.0;
    double scale_y = 1.0;
    double scale_z = 1.0;

    static PositionScaler identity() { return {}; }
    static PositionScaler for_region(const UeRegion& region);

    nn::Vector normalize(const Position& p) const;
    Position denormalize(const nn::Vector& v) const;
};

/// Everything needed to bind raw parameter vectors to working agents.
struct AgentSetup {
    int n_ris = 1;
    int phase_count = 2;
    ObservationFormat format = ObservationFormat::Stacked;
    double input_scale = 1.0; // 1/sqrt(noise power); applied to y before encoding
    double max_power_watt = 1.0;
    nn::ArchitectureSpec policy;
    nn::ArchitectureSpec power;
    nn::ArchitectureSpec estimator;
    nn::ArchitectureSpec single_agent;
    nn::ArchitectureSpec supervised;
    PositionScaler scaler;

    static AgentSetup make(const NetworkSizes& sizes, int n_ris, int phase_count, int horizon,
                           ObservationFormat format, double noise_power_watt, double max_power_watt,
                           const UeRegion& region);

    nn::Vector encode(cplx y) const { return observation_encode(y * input_scale, format); }
    std::size_t individual_size() const { return policy.parameter_count() + power.parameter_count(); }
};

struct PolicyOutput {
    nn::Vector ris_logits; // n_ris * |Theta|
    double bit_preactivation = 0.0;
};

/// Per-element softmax over consecutive groups of `phase_count` logits.
std::vector<double> element_probabilities(const nn::Vector& logits, int n_ris, int phase_count);

/// Draws (Sample) or maximizes (Argmax, ties to the lowest index) each element.
RISProfile decode_profile(const nn::Vector& logits, int n_ris, int phase_count, DecodeMode mode, Rng& rng);

class PolicyAgent {
public:
    struct Decision {
        RISProfile profile;
        FeedbackBit bit;
    };

    PolicyAgent(const nn::ArchitectureSpec& spec, std::span<const double> params, int n_ris, int phase_count);

    PolicyOutput forward(const nn::Vector& observation);
    Decision step(const nn::Vector& observation, DecodeMode mode, Rng& rng);
    void reset();

private:
    nn::NetworkView view_;
    nn::LSTMState state_;
    int n_ris_;
    int phase_count_;
};

/// UE-side network. Its only input, ever, is the latest feedback bit.
class PowerAgent {
public:
    PowerAgent(const nn::ArchitectureSpec& spec, std::span<const double> params, double max_power_watt);

    double step(FeedbackBit bit);
    void reset();

private:
    nn::NetworkView view_;
    nn::LSTMState state_;
    double max_power_;
};

class SingleAgentPolicy {
public:
    struct Decision {
        RISProfile profile;
        double power_watt = 0.0;
    };

    SingleAgentPolicy(const nn::ArchitectureSpec& spec, std::span<const double> params, int n_ris, int phase_count,
                      double max_power_watt);

    Decision step(const nn::Vector& observation, DecodeMode mode, Rng& rng);
    void reset();

private:
    nn::NetworkView view_;
    nn::LSTMState state_;
    int n_ris_;
    int phase_count_;
    double max_power_;
};

/// LSTM over the whole sequence, temporal mean of its outputs, dense head.
class Estimator {
public:
    Estimator(const nn::ArchitectureSpec& spec, std::span<const double> params, PositionScaler scaler);

    Position estimate(const std::vector<nn::Vector>& observations) const;

private:
    nn::NetworkView view_;
    PositionScaler scaler_;
};

Position estimate_position(const nn::ArchitectureSpec& spec, std::span<const double> params,
                           const PositionScaler& scaler, const std::vector<nn::Vector>& observations);

} // namespace risloc
