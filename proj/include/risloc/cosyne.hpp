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

// Cooperative synapse neuroevolution over flat parameter vectors, with the
// budget-penalized localization fitness used to co-evolve the BS policy and
// the UE power network.

#include "risloc/agents.hpp"
#include "risloc/rollout.hpp"
#include "risloc/tensor_nn.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace risloc::cosyne {

struct Individual {
    nn::ParamVector params;
    std::optional<double> fitness;
};

struct NEConfig {
    int population_size = 50;
    int generations = 100;
    double p_mut = 0.5;
    double sigma_mut = 0.5; // standard deviation of the additive Gaussian
    int episodes_per_eval = 64;
    double power_budget = 5.0; // watts summed over the horizon
    int elite_count = 2;
    /// Extra penalty (meters) subtracted from over-budget individuals. At 0
    /// the fitness compares -P_bar with -D_bar directly.
    double infeasible_offset = 0.0;

    int parent_count() const { return population_size / 4; }
    void validate() const;
};

struct FitnessEstimate {
    double fitness = 0.0;
    double mean_power = 0.0;
    double mean_distance = 0.0;
};

/// -mean_power when the budget is exceeded, otherwise -mean_distance.
double budget_penalized_fitness(double mean_power, double mean_distance, double budget,
                                double infeasible_offset = 0.0);

struct GenerationStats {
    int generation = 0;
    double best = 0.0;
    double mean = 0.0;
    double worst = 0.0;
    double feasible_fraction = 0.0;
    double best_so_far = 0.0;
};

/// Scores one flat individual on the episode block identified by `episode_seed`.
using FitnessFunction = std::function<FitnessEstimate(std::span<const double> individual, std::uint64_t episode_seed)>;
using Initializer = std::function<nn::ParamVector(Rng&)>;
using GenerationCallback = std::function<void(const GenerationStats&, const Individual& best_so_far)>;

/// Multi-agent fitness: N_EP episodes with the individual split into
/// [w_policy, w_power] and the frozen estimator scoring each trajectory.
/// Non-finite network outputs yield -infinity.
/// P_bar = mean episodic sum of P(t), D_bar = mean ||p_hat - p||; every
/// episode must carry its estimate. Non-finite averages give -inf.
FitnessEstimate fitness_of_episodes(const std::vector<Episode>& episodes, const NEConfig& ne);

FitnessEstimate evaluate_fitness(const AgentSetup& setup, std::span<const double> individual,
                                 std::span<const double> estimator_params, const RolloutConfig& config,
                                 const Scenario& scenario, const NEConfig& ne, std::uint64_t episode_seed);

/// Same protocol for the single-agent variant (individual = policy only).
FitnessEstimate evaluate_single_agent_fitness(const AgentSetup& setup, std::span<const double> individual,
                                              std::span<const double> estimator_params, const RolloutConfig& config,
                                              const Scenario& scenario, const NEConfig& ne,
                                              std::uint64_t episode_seed);

/// Population indices sorted by descending fitness, ties to the lower index.
std::vector<std::size_t> rank_population(const std::vector<double>& fitness);

/// The best floor(L/4) indices.
std::vector<std::size_t> select_parents(const std::vector<double>& fitness);

nn::ParamVector crossover(const nn::ParamVector& a, const nn::ParamVector& b, Rng& rng);

void mutate(nn::ParamVector& params, double p_mut, double sigma_mut, Rng& rng);

/// Probability that the gene of the individual at `rank` (0 = best) joins a
/// column shuffle: 1 - sqrt(1 - rank / (L - 1)).
double shuffle_probability(std::size_t rank, std::size_t population_size);

/// Column-wise synapse permutation over a rank-ordered population. Each gene
/// is marked with shuffle_probability(rank); marked genes of one column are
/// permuted among themselves. The first `immune` individuals are untouched.
void permute_synapses(std::vector<nn::ParamVector>& ranked, Rng& rng, std::size_t immune = 0);

struct EvolutionResult {
    Individual best;
    FitnessEstimate best_estimate;
    int best_generation = 0;
    std::vector<GenerationStats> history;
};

/// Generation 0 scores the random initial population; each of the N_gen
/// following generations keeps the elites, breeds the remaining slots from
/// the parent pool (crossover, mutation, synapse permutation) and rescored
/// everyone on a common episode block. Returns the best individual ever scored.
EvolutionResult evolve(const NEConfig& config, const Initializer& init, const FitnessFunction& fitness,
                       std::uint64_t seed, const GenerationCallback& on_generation = {});

std::string generation_stats_csv_header();
std::string generation_stats_csv_row(const GenerationStats& s);

} // namespace risloc::cosyne
