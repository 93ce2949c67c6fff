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

#include "risloc/agents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace risloc {

int observation_dim(ObservationFormat format) { return format == ObservationFormat::Stacked ? 2 : 1; }

std::string to_string(ObservationFormat format) { return format == ObservationFormat::Stacked ? "stacked" : "rss"; }

std::string to_string(DecodeMode mode) { return mode == DecodeMode::Sample ? "sample" : "argmax"; }

nn::Vector observation_encode(cplx y, ObservationFormat format)
{
    if (format == ObservationFormat::Stacked)
        return nn::Vector{{y.real(), y.imag()}};
    return nn::Vector{{std::norm(y)}};
}

FeedbackBit::FeedbackBit(int value) : value_(static_cast<std::uint8_t>(value))
{
    if (value != 0 && value != 1)
        throw std::invalid_argument("feedback bit must be 0 or 1");
}

FeedbackBit decode_bit(double preactivation)
{
    if (std::isnan(preactivation))
        throw nn::NumericalError("feedback preactivation is NaN");
    return FeedbackBit(std::tanh(preactivation) >= 0.0 ? 1 : 0);
}

NetworkSizes NetworkSizes::paper()
{
    return {{512, 512}, {128}, {32}, {64}, {128, 128}, {400, 400, 400, 400}};
}

NetworkSizes NetworkSizes::desk() { return {{32, 32}, {16}, {8}, {16}, {16, 16}, {16, 16}}; }

nn::ArchitectureSpec policy_architecture(const NetworkSizes& sizes, int n_ris, int phase_count,
                                         ObservationFormat format)
{
    nn::ArchitectureSpec spec{observation_dim(format), sizes.lstm_hidden,
                              {nn::mlp_head(sizes.policy_ris_hidden, n_ris * phase_count),
                               nn::mlp_head(sizes.policy_bit_hidden, 1)}};
    spec.validate();
    return spec;
}

nn::ArchitectureSpec power_architecture(const NetworkSizes& sizes)
{
    nn::ArchitectureSpec spec{1, sizes.lstm_hidden, {nn::mlp_head(sizes.power_hidden, 1)}};
    spec.validate();
    return spec;
}

nn::ArchitectureSpec estimator_architecture(const NetworkSizes& sizes, ObservationFormat format)
{
    nn::ArchitectureSpec spec{observation_dim(format), sizes.lstm_hidden, {nn::mlp_head(sizes.estimator_hidden, 3)}};
    spec.validate();
    return spec;
}

nn::ArchitectureSpec single_agent_architecture(const NetworkSizes& sizes, int n_ris, int phase_count,
                                               ObservationFormat format)
{
    return policy_architecture(sizes, n_ris, phase_count, format);
}

nn::ArchitectureSpec supervised_architecture(const NetworkSizes& sizes, int horizon, ObservationFormat format)
{
    nn::ArchitectureSpec spec{observation_dim(format) * horizon, {}, {nn::mlp_head(sizes.supervised_hidden, 3)}};
    spec.validate();
    return spec;
}

PositionScaler PositionScaler::for_region(const UeRegion& region)
{
    return {region.center, std::max(region.x_half, 1.0), std::max(region.y_half, 1.0), 1.0};
}

nn::Vector PositionScaler::normalize(const Position& p) const
{
    return nn::Vector{{(p.x - center.x) / scale_x, (p.y - center.y) / scale_y, (p.z - center.z) / scale_z}};
}

Position PositionScaler::denormalize(const nn::Vector& v) const
{
    return {center.x + scale_x * v[0], center.y + scale_y * v[1], center.z + scale_z * v[2]};
}

AgentSetup AgentSetup::make(const NetworkSizes& sizes, int n_ris, int phase_count, int horizon,
                            ObservationFormat format, double noise_power_watt, double max_power_watt,
                            const UeRegion& region)
{
    if (!(noise_power_watt > 0.0))
        throw std::invalid_argument("noise power must be positive for input normalization");
    AgentSetup s;
    s.n_ris = n_ris;
    s.phase_count = phase_count;
    s.format = format;
    s.input_scale = 1.0 / std::sqrt(noise_power_watt);
    s.max_power_watt = max_power_watt;
    s.policy = policy_architecture(sizes, n_ris, phase_count, format);
    s.power = power_architecture(sizes);
    s.estimator = estimator_architecture(sizes, format);
    s.single_agent = single_agent_architecture(sizes, n_ris, phase_count, format);
    s.supervised = supervised_architecture(sizes, horizon, format);
    s.scaler = PositionScaler::for_region(region);
    return s;
}

std::vector<double> element_probabilities(const nn::Vector& logits, int n_ris, int phase_count)
{
    if (logits.size() != static_cast<Eigen::Index>(n_ris) * phase_count)
        throw std::invalid_argument("RIS logits have wrong length");
    std::vector<double> p(static_cast<std::size_t>(logits.size()));
    for (int e = 0; e < n_ris; ++e) {
        const auto group = logits.segment(static_cast<Eigen::Index>(e) * phase_count, phase_count);
        const double top = group.maxCoeff();
        double sum = 0.0;
        for (int k = 0; k < phase_count; ++k) {
            const double v = std::exp(group[k] - top);
            p[static_cast<std::size_t>(e * phase_count + k)] = v;
            sum += v;
        }
        for (int k = 0; k < phase_count; ++k)
            p[static_cast<std::size_t>(e * phase_count + k)] /= sum;
    }
    return p;
}

RISProfile decode_profile(const nn::Vector& logits, int n_ris, int phase_count, DecodeMode mode, Rng& rng)
{
    if (!logits.allFinite())
        throw nn::NumericalError("non-finite RIS logits");
    std::vector<std::uint16_t> idx(static_cast<std::size_t>(n_ris));
    if (mode == DecodeMode::Argmax) {
        if (logits.size() != static_cast<Eigen::Index>(n_ris) * phase_count)
            throw std::invalid_argument("RIS logits have wrong length");
        for (int e = 0; e < n_ris; ++e) {
            Eigen::Index best = 0;
            logits.segment(static_cast<Eigen::Index>(e) * phase_count, phase_count).maxCoeff(&best);
            idx[static_cast<std::size_t>(e)] = static_cast<std::uint16_t>(best);
        }
    } else {
        const auto p = element_probabilities(logits, n_ris, phase_count);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int e = 0; e < n_ris; ++e) {
            const double r = u(rng);
            double acc = 0.0;
            int pick = phase_count - 1;
            for (int k = 0; k < phase_count; ++k) {
                acc += p[static_cast<std::size_t>(e * phase_count + k)];
                if (r < acc) {
                    pick = k;
                    break;
                }
            }
            idx[static_cast<std::size_t>(e)] = static_cast<std::uint16_t>(pick);
        }
    }
    return RISProfile(std::move(idx), static_cast<std::size_t>(phase_count));
}

PolicyAgent::PolicyAgent(const nn::ArchitectureSpec& spec, std::span<const double> params, int n_ris,
                         int phase_count)
    : view_(spec, params), state_(nn::LSTMState::zeros(spec)), n_ris_(n_ris), phase_count_(phase_count)
{
    if (spec.heads.size() != 2 || spec.head_output_dim(0) != n_ris * phase_count || spec.head_output_dim(1) != 1)
        throw std::invalid_argument("policy architecture does not match RIS size");
}

PolicyOutput PolicyAgent::forward(const nn::Vector& observation)
{
    const nn::Vector trunk = view_.lstm_step(state_, observation);
    return {view_.feed_forward(0, trunk), view_.feed_forward(1, trunk)[0]};
}

PolicyAgent::Decision PolicyAgent::step(const nn::Vector& observation, DecodeMode mode, Rng& rng)
{
    const PolicyOutput out = forward(observation);
    RISProfile profile = decode_profile(out.ris_logits, n_ris_, phase_count_, mode, rng);
    return {std::move(profile), decode_bit(out.bit_preactivation)};
}

void PolicyAgent::reset() { state_ = nn::LSTMState::zeros(view_.spec()); }

PowerAgent::PowerAgent(const nn::ArchitectureSpec& spec, std::span<const double> params, double max_power_watt)
    : view_(spec, params), state_(nn::LSTMState::zeros(spec)), max_power_(max_power_watt)
{
    if (spec.input_dim != 1 || spec.heads.size() != 1 || spec.head_output_dim(0) != 1)
        throw std::invalid_argument("power architecture must map one bit to one scalar");
}

double PowerAgent::step(FeedbackBit bit)
{
    const nn::Vector in{{static_cast<double>(bit.value())}};
    const double s = view_.feed_forward(0, view_.lstm_step(state_, in))[0];
    if (std::isnan(s))
        throw nn::NumericalError("power network produced NaN");
    return max_power_ / (1.0 + std::exp(-s));
}

void PowerAgent::reset() { state_ = nn::LSTMState::zeros(view_.spec()); }

SingleAgentPolicy::SingleAgentPolicy(const nn::ArchitectureSpec& spec, std::span<const double> params, int n_ris,
                                     int phase_count, double max_power_watt)
    : view_(spec, params), state_(nn::LSTMState::zeros(spec)), n_ris_(n_ris), phase_count_(phase_count),
      max_power_(max_power_watt)
{
    if (spec.heads.size() != 2 || spec.head_output_dim(0) != n_ris * phase_count || spec.head_output_dim(1) != 1)
        throw std::invalid_argument("single-agent architecture does not match RIS size");
}

SingleAgentPolicy::Decision SingleAgentPolicy::step(const nn::Vector& observation, DecodeMode mode, Rng& rng)
{
    const nn::Vector trunk = view_.lstm_step(state_, observation);
    RISProfile profile = decode_profile(view_.feed_forward(0, trunk), n_ris_, phase_count_, mode, rng);
    const double s = view_.feed_forward(1, trunk)[0];
    if (std::isnan(s))
        throw nn::NumericalError("power head produced NaN");
    return {std::move(profile), max_power_ / (1.0 + std::exp(-s))};
}

void SingleAgentPolicy::reset() { state_ = nn::LSTMState::zeros(view_.spec()); }

Estimator::Estimator(const nn::ArchitectureSpec& spec, std::span<const double> params, PositionScaler scaler)
    : view_(spec, params), scaler_(scaler)
{
    if (spec.heads.size() != 1 || spec.head_output_dim(0) != 3)
        throw std::invalid_argument("estimator must have one 3-output head");
}

Position Estimator::estimate(const std::vector<nn::Vector>& observations) const
{
    if (observations.empty())
        throw std::invalid_argument("estimator needs at least one observation");
    const auto& spec = view_.spec();
    nn::Vector pooled;
    if (spec.lstm_hidden.empty()) {
        if (observations.size() != 1)
            throw std::invalid_argument("feed-forward estimator takes a single input");
        pooled = observations.front();
    } else {
        nn::LSTMState state = nn::LSTMState::zeros(spec);
        pooled = nn::Vector::Zero(spec.trunk_dim());
        for (const auto& y : observations)
            pooled += view_.lstm_step(state, y);
        pooled /= static_cast<double>(observations.size());
    }
    return scaler_.denormalize(view_.feed_forward(0, pooled));
}

Position estimate_position(const nn::ArchitectureSpec& spec, std::span<const double> params,
                           const PositionScaler& scaler, const std::vector<nn::Vector>& observations)
{
    return Estimator(spec, params, scaler).estimate(observations);
}

} // namespace risloc
