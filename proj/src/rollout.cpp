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

#include "risloc/rollout.hpp"

#include "risloc/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace risloc {

void RolloutConfig::validate(const Scenario& scenario) const
{
    if (horizon < 1)
        throw std::invalid_argument("horizon must be >= 1");
    if (!(initial_power_watt >= 0.0 && initial_power_watt <= scenario.max_power()))
        throw std::invalid_argument("initial power must lie in [0, P_max]");
    if (initial_profile) {
        if (initial_profile->size() != static_cast<std::size_t>(scenario.n_ris()))
            throw std::invalid_argument("initial profile length does not match the RIS");
        RISProfile check(initial_profile->indices(), scenario.phases.size());
    }
}

RISProfile RolloutConfig::first_profile(const Scenario& scenario) const
{
    return initial_profile ? *initial_profile : RISProfile::zeros(scenario.n_ris());
}

MultiAgentController::MultiAgentController(const AgentSetup& setup, std::span<const double> policy_params,
                                           std::span<const double> power_params, DecodeMode mode)
    : setup_(&setup), policy_(setup.policy, policy_params, setup.n_ris, setup.phase_count),
      power_(setup.power, power_params, setup.max_power_watt), mode_(mode)
{
}

void MultiAgentController::reset()
{
    policy_.reset();
    power_.reset();
    ue_inputs_.clear();
}

SensingController::Decision MultiAgentController::step(cplx y, Rng& rng)
{
    auto d = policy_.step(setup_->encode(y), mode_, rng);
    // The UE side sees the bit and nothing else.
    ue_inputs_.push_back(d.bit);
    const double p = power_.step(d.bit);
    return {std::move(d.profile), p, d.bit, std::nullopt};
}

SingleAgentController::SingleAgentController(const AgentSetup& setup, std::span<const double> params,
                                             DecodeMode mode)
    : setup_(&setup), policy_(setup.single_agent, params, setup.n_ris, setup.phase_count, setup.max_power_watt),
      mode_(mode)
{
}

void SingleAgentController::reset() { policy_.reset(); }

SensingController::Decision SingleAgentController::step(cplx y, Rng& rng)
{
    auto d = policy_.step(setup_->encode(y), mode_, rng);
    return {std::move(d.profile), d.power_watt, std::nullopt, d.power_watt};
}

OpenLoopController::OpenLoopController(const Scenario& scenario, bool uniform_power)
    : scenario_(&scenario), max_power_(scenario.max_power()), uniform_power_(uniform_power)
{
}

OpenLoopController::OpenLoopController(std::vector<RISProfile> sequence, double max_power_watt, bool uniform_power)
    : sequence_(std::move(sequence)), max_power_(max_power_watt), uniform_power_(uniform_power)
{
    if (sequence_.empty())
        throw std::invalid_argument("profile sequence must not be empty");
}

SensingController::Decision OpenLoopController::next(Rng& rng)
{
    Decision d;
    d.profile = scenario_ ? random_profile(*scenario_, rng) : sequence_[t_ % sequence_.size()];
    ++t_;
    if (uniform_power_) {
        std::uniform_real_distribution<double> u(0.0, max_power_);
        d.power_watt = u(rng);
    } else {
        d.power_watt = max_power_;
    }
    return d;
}

SensingController::Decision OpenLoopController::step(cplx, Rng& rng) { return next(rng); }

std::optional<SensingController::Decision> OpenLoopController::initial(Rng& rng) { return next(rng); }

Episode run_controlled_episode(SensingController& controller, const RolloutConfig& config, const Scenario& scenario,
                               Rng& rng, std::optional<Position> position)
{
    config.validate(scenario);
    Episode ep;
    ep.true_position = position ? *position : sample_ue_position(scenario.geometry(), rng);
    controller.reset();

    RISProfile profile = config.first_profile(scenario);
    double power = config.initial_power_watt;
    if (auto init = controller.initial(rng)) {
        profile = std::move(init->profile);
        power = init->power_watt;
    }

    const auto T = static_cast<std::size_t>(config.horizon);
    ep.observations.reserve(T);
    ep.profiles.reserve(T);
    ep.powers.reserve(T);

    std::optional<ChannelRealization> static_channel;
    if (config.episode_static_channel)
        static_channel = scenario.channel.sample(ep.true_position, rng);

    for (std::size_t t = 0; t < T; ++t) {
        const ChannelRealization h =
            static_channel ? *static_channel : scenario.channel.sample(ep.true_position, rng);
        const cplx y = synthesize_observation(h, profile, scenario.phases, power, scenario.params(), rng);
        ep.observations.push_back(y);
        ep.profiles.push_back(profile);
        ep.powers.push_back(power);

        auto d = controller.step(y, rng);
        if (d.bit)
            ep.bits.push_back(*d.bit);
        if (d.exact_power)
            ep.exact_feedback.push_back(*d.exact_power);
        if (!(d.power_watt >= 0.0 && d.power_watt <= scenario.max_power()))
            throw std::out_of_range("controller produced power outside [0, P_max]");
        profile = std::move(d.profile);
        power = d.power_watt;
    }
    return ep;
}

Episode run_episode(const AgentSetup& setup, std::span<const double> policy_params,
                    std::span<const double> power_params, const RolloutConfig& config, const Scenario& scenario,
                    Rng& rng)
{
    MultiAgentController controller(setup, policy_params, power_params, config.decode);
    return run_controlled_episode(controller, config, scenario, rng);
}

Episode run_random_episode(const RolloutConfig& config, const Scenario& scenario, Rng& rng)
{
    OpenLoopController controller(scenario, true);
    return run_controlled_episode(controller, config, scenario, rng);
}

RISProfile random_profile(const Scenario& scenario, Rng& rng)
{
    const auto q = static_cast<std::uint16_t>(scenario.phases.size());
    std::uniform_int_distribution<std::uint16_t> u(0, static_cast<std::uint16_t>(q - 1));
    std::vector<std::uint16_t> idx(static_cast<std::size_t>(scenario.n_ris()));
    for (auto& i : idx)
        i = u(rng);
    return RISProfile(std::move(idx), q);
}

double episode_power_total(const Episode& episode)
{
    double sum = 0.0;
    for (double p : episode.powers)
        sum += p;
    return sum;
}

std::vector<Episode> collect_episodes(const ControllerFactory& factory, std::size_t n, const RolloutConfig& config,
                                      const Scenario& scenario, std::uint64_t seed)
{
    std::vector<Episode> out(n);
    parallel_for(n, [&](std::size_t i) {
        Rng rng(derive_seed(seed, 0, i));
        auto controller = factory();
        out[i] = run_controlled_episode(*controller, config, scenario, rng);
    });
    return out;
}

std::vector<Episode> collect_random_episodes(std::size_t n, const RolloutConfig& config, const Scenario& scenario,
                                             std::uint64_t seed)
{
    return collect_episodes([&] { return std::make_unique<OpenLoopController>(scenario, true); }, n, config, scenario,
                            seed);
}

std::vector<nn::Vector> encode_observations(const Episode& episode, const AgentSetup& setup)
{
    std::vector<nn::Vector> out;
    out.reserve(episode.observations.size());
    for (cplx y : episode.observations)
        out.push_back(setup.encode(y));
    return out;
}

EvaluationResult evaluate_episodes(std::vector<Episode>& episodes, const PositionEstimator& estimator)
{
    if (episodes.empty())
        throw std::invalid_argument("evaluation needs at least one episode");
    parallel_for(episodes.size(), [&](std::size_t i) { episodes[i].estimate = estimator(episodes[i]); });
    EvaluationResult r;
    double sq = 0.0;
    for (const auto& ep : episodes) {
        const double d = distance(*ep.estimate, ep.true_position);
        sq += d * d;
        r.mean_distance += d;
        r.mean_power += episode_power_total(ep);
    }
    const auto n = static_cast<double>(episodes.size());
    r.rmse_m = std::sqrt(sq / n);
    r.mean_distance /= n;
    r.mean_power /= n;
    r.episodes = episodes.size();
    return r;
}

PositionEstimator lstm_estimator(const AgentSetup& setup, std::span<const double> estimator_params)
{
    auto est = std::make_shared<Estimator>(setup.estimator, estimator_params, setup.scaler);
    return [est, &setup](const Episode& ep) { return est->estimate(encode_observations(ep, setup)); };
}

EvaluationResult evaluate_rmse(const AgentSetup& setup, std::span<const double> policy_params,
                               std::span<const double> power_params, std::span<const double> estimator_params,
                               std::size_t n_episodes, const RolloutConfig& config, const Scenario& scenario,
                               std::uint64_t seed)
{
    auto episodes = collect_episodes(
        [&] { return std::make_unique<MultiAgentController>(setup, policy_params, power_params, config.decode); },
        n_episodes, config, scenario, seed);
    return evaluate_episodes(episodes, lstm_estimator(setup, estimator_params));
}

} // namespace risloc
