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

// Three-stage training (initial estimator, policy evolution, estimator
// retraining), evaluation helpers and the results table.

#include "risloc/config.hpp"
#include "risloc/cosyne.hpp"
#include "risloc/rollout.hpp"
#include "risloc/supervised.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace risloc {

/// Resolved config plus the objects every stage needs. Controllers keep a
/// pointer to `setup`, so an Experiment must outlive them and stay in place.
struct Experiment {
    ExperimentConfig config;
    Scenario scenario;
    AgentSetup setup;

    explicit Experiment(ExperimentConfig cfg);
    Experiment(const Experiment&) = delete;
    Experiment& operator=(const Experiment&) = delete;

    std::uint64_t seed(SeedStage stage, std::uint64_t task = 0) const { return derive_seed(config.seed, stage, task); }
    /// Episode block shared by every method so that comparisons are paired.
    std::uint64_t evaluation_seed() const { return seed(SeedStage::Evaluation); }
    RolloutConfig rollout(DecodeMode mode) const;
};

struct EstimatorTraining {
    nn::ParamVector params;
    TrainingReport report;
};

struct PolicyPair {
    nn::ParamVector policy;
    nn::ParamVector power;
};

PolicyPair split_individual(const AgentSetup& setup, std::span<const double> individual);
nn::ParamVector concatenate(const PolicyPair& pair);

struct Stage1Result {
    EstimatorTraining estimator;
    EvaluationResult reference; // random profiles, uniform power, held-out
};

struct Stage2Result {
    PolicyPair pair;
    cosyne::EvolutionResult evolution;
    std::uint64_t estimator_hash_before = 0;
    std::uint64_t estimator_hash_after = 0;
};

std::uint64_t params_hash(std::span<const double> params);

/// Random-profile, uniform-power episodes for the initial estimator.
std::vector<Episode> stage1_dataset(const Experiment& exp);
/// Episodes collected under the learned agents (training decode mode).
std::vector<Episode> stage3_dataset(const Experiment& exp, const PolicyPair& pair);

/// Minibatch Adam on the MSE of the pooled LSTM estimator.
EstimatorTraining train_estimator(const Experiment& exp, const std::vector<Episode>& episodes, std::uint64_t seed,
                                  const std::optional<nn::ParamVector>& warm_start = std::nullopt);

Stage1Result stage1_train_initial_estimator(const Experiment& exp);
/// Stage 1 from an already generated dataset.
Stage1Result stage1_train_initial_estimator(const Experiment& exp, const std::vector<Episode>& episodes);

Stage2Result stage2_evolve_policies(const Experiment& exp, const nn::ParamVector& initial_estimator,
                                    const cosyne::GenerationCallback& on_generation = {});

EstimatorTraining stage3_retrain_estimator(const Experiment& exp, const PolicyPair& pair,
                                           const nn::ParamVector& initial_estimator);
EstimatorTraining stage3_retrain_estimator(const Experiment& exp, const std::vector<Episode>& episodes,
                                           const nn::ParamVector& initial_estimator);

EvaluationResult evaluate_ma(const Experiment& exp, const PolicyPair& pair, const nn::ParamVector& estimator,
                             DecodeMode mode, std::size_t episodes, std::uint64_t seed);

/// Mean episodic power of the pair over fresh episodes (no estimator involved).
double audit_power(const Experiment& exp, const PolicyPair& pair, DecodeMode mode, std::size_t episodes,
                   std::uint64_t seed);

struct PipelineArtifacts {
    Stage1Result stage1;
    Stage2Result stage2;
    EstimatorTraining stage3;
};

PipelineArtifacts run_pipeline(const Experiment& exp, const cosyne::GenerationCallback& on_generation = {});

struct ResultRow {
    std::string method;
    int n_ris = 0;
    double noise_dbm = 0.0;
    ObservationFormat format = ObservationFormat::Stacked;
    double rmse_m = 0.0;
    double mean_power = 0.0;
    bool budget_ok = true;
    std::uint64_t seed = 0;
};

/// Slack applied to B_P when auditing mean episodic power.
inline constexpr double kBudgetSlack = 1.05;

std::string results_csv_header();
std::string results_csv_row(const ResultRow& row);
std::string results_csv(const std::vector<ResultRow>& rows);

/// All requested methods at one (N_ris, noise, format) point.
std::vector<ResultRow> evaluate_point(const Experiment& exp, const std::vector<std::string>& methods);

using SweepProgress = std::function<void(const ResultRow&)>;

/// Cartesian product of the sweep axes in the config, methods innermost.
std::vector<ResultRow> run_sweep(const ExperimentConfig& config, const SweepProgress& progress = {});

} // namespace risloc
