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
#include "risloc/channel.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace risloc {

/// Fixed environment of one experiment: geometry, channel statistics and
/// the RIS phase alphabet.
struct Scenario {
    ChannelModel channel;
    PhaseSet phases;

    Scenario(const ScenarioGeometry& geometry, const ChannelParams& params, PhaseSet phase_set)
        : channel(geometry, params), phases(std::move(phase_set))
    {
    }

    const ScenarioGeometry& geometry() const { return channel.geometry(); }
    const ChannelParams& params() const { return channel.params(); }
    int n_ris() const { return geometry().n_ris(); }
    double max_power() const { return params().max_power_watt; }
};

struct RolloutConfig {
    int horizon = 10;
    double initial_power_watt = 1.0;
    std::optional<RISProfile> initial_profile; // all-zeros when empty
    ObservationFormat format = ObservationFormat::Stacked;
    DecodeMode decode = DecodeMode::Sample;
    bool episode_static_channel = false;

    void validate(const Scenario& scenario) const;
    RISProfile first_profile(const Scenario& scenario) const;
};

struct Episode {
    Position true_position;
    std::vector<cplx> observations;
    std::vector<RISProfile> profiles;
    std::vector<double> powers;
    /// Present for the multi-agent scheme: one bit per frame.
    std::vector<FeedbackBit> bits;
    /// Present for the single-agent scheme: the exact power value fed back.
    std::vector<double> exact_feedback;
    std::optional<Position> estimate;

    int horizon() const { return static_cast<int>(observations.size()); }
};

/// Closed-loop decision maker driven by the received samples.
class SensingController {
public:
    struct Decision {
        RISProfile profile; // for the next frame
        double power_watt = 0.0;
        std::optional<FeedbackBit> bit;
        std::optional<double> exact_power;
    };

    virtual ~SensingController() = default;
    virtual void reset() = 0;
    virtual Decision step(cplx y, Rng& rng) = 0;
    /// Frame-1 power and profile; the rollout config's initializations are
    /// used when this returns nothing.
    virtual std::optional<Decision> initial(Rng&) { return std::nullopt; }
};

using ControllerFactory = std::function<std::unique_ptr<SensingController>()>;

/// BS policy + UE power agent coupled by a 1-bit feedback link.
class MultiAgentController final : public SensingController {
public:
    MultiAgentController(const AgentSetup& setup, std::span<const double> policy_params,
                         std::span<const double> power_params, DecodeMode mode);

    void reset() override;
    Decision step(cplx y, Rng& rng) override;

    /// Everything the UE agent received since the last reset.
    const std::vector<FeedbackBit>& ue_inputs() const { return ue_inputs_; }

private:
    const AgentSetup* setup_;
    PolicyAgent policy_;
    PowerAgent power_;
    DecodeMode mode_;
    std::vector<FeedbackBit> ue_inputs_;
};

class SingleAgentController final : public SensingController {
public:
    SingleAgentController(const AgentSetup& setup, std::span<const double> params, DecodeMode mode);

    void reset() override;
    Decision step(cplx y, Rng& rng) override;

private:
    const AgentSetup* setup_;
    SingleAgentPolicy policy_;
    DecodeMode mode_;
};

/// Non-adaptive sensing: a uniformly random profile per frame, or a fixed
/// profile sequence replayed cyclically; power i.i.d. U[0, P_max] or held at
/// P_max.
class OpenLoopController final : public SensingController {
public:
    /// Fresh random profile every frame.
    OpenLoopController(const Scenario& scenario, bool uniform_power);
    /// Frame t uses sequence[t mod size].
    OpenLoopController(std::vector<RISProfile> sequence, double max_power_watt, bool uniform_power);

    void reset() override { t_ = 0; }
    Decision step(cplx y, Rng& rng) override;
    std::optional<Decision> initial(Rng& rng) override;

private:
    Decision next(Rng& rng);

    const Scenario* scenario_ = nullptr;
    std::vector<RISProfile> sequence_;
    double max_power_;
    bool uniform_power_;
    std::size_t t_ = 0;
};

/// Shared frame loop: samples the UE position, then for each frame draws the
/// channel, synthesizes y(t) from the current power and profile, and asks
/// the controller for the next ones.
Episode run_controlled_episode(SensingController& controller, const RolloutConfig& config, const Scenario& scenario,
                               Rng& rng, std::optional<Position> position = std::nullopt);

Episode run_episode(const AgentSetup& setup, std::span<const double> policy_params,
                    std::span<const double> power_params, const RolloutConfig& config, const Scenario& scenario,
                    Rng& rng);

/// Uniform random profile and U[0, P_max] power in every frame; no agents.
Episode run_random_episode(const RolloutConfig& config, const Scenario& scenario, Rng& rng);

RISProfile random_profile(const Scenario& scenario, Rng& rng);

double episode_power_total(const Episode& episode);

/// Episodes i = 0..n-1, each with its own stream derive_seed(seed, stage, i).
std::vector<Episode> collect_episodes(const ControllerFactory& factory, std::size_t n, const RolloutConfig& config,
                                      const Scenario& scenario, std::uint64_t seed);
std::vector<Episode> collect_random_episodes(std::size_t n, const RolloutConfig& config, const Scenario& scenario,
                                             std::uint64_t seed);

std::vector<nn::Vector> encode_observations(const Episode& episode, const AgentSetup& setup);

struct EvaluationResult {
    double rmse_m = 0.0;
    double mean_power = 0.0;    // mean episodic sum of P(t), watts
    double mean_distance = 0.0; // mean Euclidean error, meters
    std::size_t episodes = 0;
};

using PositionEstimator = std::function<Position(const Episode&)>;

/// Fills episode.estimate and returns RMSE, mean episodic power and mean error.
EvaluationResult evaluate_episodes(std::vector<Episode>& episodes, const PositionEstimator& estimator);

PositionEstimator lstm_estimator(const AgentSetup& setup, std::span<const double> estimator_params);

EvaluationResult evaluate_rmse(const AgentSetup& setup, std::span<const double> policy_params,
                               std::span<const double> power_params, std::span<const double> estimator_params,
                               std::size_t n_episodes, const RolloutConfig& config, const Scenario& scenario,
                               std::uint64_t seed);

} // namespace risloc
