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

#include "risloc/cosyne.hpp"

#include "risloc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace risloc::cosyne {

namespace {

constexpr double kCulled = -std::numeric_limits<double>::infinity();

FitnessEstimate score_episodes(const std::function<Episode(Rng&)>& run, const AgentSetup& setup,
                               std::span<const double> estimator_params, const NEConfig& ne,
                               std::uint64_t episode_seed)
{
    const Estimator estimator(setup.estimator, estimator_params, setup.scaler);
    std::vector<Episode> episodes;
    episodes.reserve(static_cast<std::size_t>(ne.episodes_per_eval));
    try {
        for (int e = 0; e < ne.episodes_per_eval; ++e) {
            Rng rng(derive_seed(episode_seed, 0, static_cast<std::uint64_t>(e)));
            Episode ep = run(rng);
            ep.estimate = estimator.estimate(encode_observations(ep, setup));
            episodes.push_back(std::move(ep));
        }
    } catch (const nn::NumericalError&) {
        return {kCulled, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    }
    return fitness_of_episodes(episodes, ne);
}

} // namespace

void NEConfig::validate() const
{
    if (population_size < 4 || parent_count() < 2)
        throw std::invalid_argument("population size must be >= 8 so that floor(L/4) >= 2");
    if (generations < 0)
        throw std::invalid_argument("generation count must be >= 0");
    if (!(p_mut >= 0.0 && p_mut <= 1.0))
        throw std::invalid_argument("mutation probability must lie in [0, 1]");
    if (!(sigma_mut >= 0.0) || !std::isfinite(sigma_mut))
        throw std::invalid_argument("mutation std must be non-negative");
    if (episodes_per_eval < 1)
        throw std::invalid_argument("episodes per evaluation must be >= 1");
    if (!(power_budget >= 0.0) || !std::isfinite(power_budget))
        throw std::invalid_argument("power budget must be non-negative");
    if (elite_count < 0 || elite_count >= population_size)
        throw std::invalid_argument("elite count must lie in [0, L_pop)");
    if (!(infeasible_offset >= 0.0) || !std::isfinite(infeasible_offset))
        throw std::invalid_argument("infeasible offset must be non-negative");
}

double budget_penalized_fitness(double mean_power, double mean_distance, double budget, double infeasible_offset)
{
    return mean_power > budget ? -mean_power - infeasible_offset : -mean_distance;
}

FitnessEstimate fitness_of_episodes(const std::vector<Episode>& episodes, const NEConfig& ne)
{
    if (episodes.empty())
        throw std::invalid_argument("fitness needs at least one episode");
    double power = 0.0;
    double dist = 0.0;
    for (const auto& ep : episodes) {
        if (!ep.estimate)
            throw std::invalid_argument("episode has no position estimate");
        power += episode_power_total(ep);
        dist += distance(*ep.estimate, ep.true_position);
    }
    const auto n = static_cast<double>(episodes.size());
    FitnessEstimate f{0.0, power / n, dist / n};
    if (!std::isfinite(f.mean_power) || !std::isfinite(f.mean_distance))
        f.fitness = kCulled;
    else
        f.fitness = budget_penalized_fitness(f.mean_power, f.mean_distance, ne.power_budget, ne.infeasible_offset);
    return f;
}

FitnessEstimate evaluate_fitness(const AgentSetup& setup, std::span<const double> individual,
                                 std::span<const double> estimator_params, const RolloutConfig& config,
                                 const Scenario& scenario, const NEConfig& ne, std::uint64_t episode_seed)
{
    const std::size_t np = setup.policy.parameter_count();
    if (individual.size() != np + setup.power.parameter_count())
        throw std::invalid_argument("individual length does not match [w_policy, w_power]");
    MultiAgentController controller(setup, individual.first(np), individual.subspan(np), config.decode);
    return score_episodes([&](Rng& rng) { return run_controlled_episode(controller, config, scenario, rng); }, setup,
                          estimator_params, ne, episode_seed);
}

FitnessEstimate evaluate_single_agent_fitness(const AgentSetup& setup, std::span<const double> individual,
                                              std::span<const double> estimator_params, const RolloutConfig& config,
                                              const Scenario& scenario, const NEConfig& ne,
                                              std::uint64_t episode_seed)
{
    SingleAgentController controller(setup, individual, config.decode);
    return score_episodes([&](Rng& rng) { return run_controlled_episode(controller, config, scenario, rng); }, setup,
                          estimator_params, ne, episode_seed);
}

std::vector<std::size_t> rank_population(const std::vector<double>& fitness)
{
    std::vector<std::size_t> order(fitness.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
    return order;
}

std::vector<std::size_t> select_parents(const std::vector<double>& fitness)
{
    auto order = rank_population(fitness);
    order.resize(fitness.size() / 4);
    return order;
}

nn::ParamVector crossover(const nn::ParamVector& a, const nn::ParamVector& b, Rng& rng)
{
    if (a.size() != b.size())
        throw std::invalid_argument("crossover parents differ in length");
    std::bernoulli_distribution coin(0.5);
    nn::ParamVector child(a.size());
    for (Eigen::Index k = 0; k < a.size(); ++k)
        child[k] = coin(rng) ? a[k] : b[k];
    return child;
}

void mutate(nn::ParamVector& params, double p_mut, double sigma_mut, Rng& rng)
{
    if (p_mut <= 0.0)
        return;
    std::bernoulli_distribution hit(p_mut);
    std::normal_distribution<double> noise(0.0, sigma_mut);
    for (Eigen::Index k = 0; k < params.size(); ++k)
        if (hit(rng))
            params[k] += noise(rng);
}

double shuffle_probability(std::size_t rank, std::size_t population_size)
{
    if (population_size < 2)
        return 0.0;
    const double standing = 1.0 - static_cast<double>(rank) / static_cast<double>(population_size - 1);
    return 1.0 - std::sqrt(standing);
}

void permute_synapses(std::vector<nn::ParamVector>& ranked, Rng& rng, std::size_t immune)
{
    const std::size_t L = ranked.size();
    if (L < 2 || immune >= L)
        return;
    const Eigen::Index n = ranked.front().size();
    for (const auto& v : ranked)
        if (v.size() != n)
            throw std::invalid_argument("population members differ in length");

    std::vector<double> prob(L);
    for (std::size_t j = 0; j < L; ++j)
        prob[j] = shuffle_probability(j, L);

    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::size_t> marked;
    std::vector<double> genes;
    for (Eigen::Index k = 0; k < n; ++k) {
        marked.clear();
        for (std::size_t j = immune; j < L; ++j)
            if (u(rng) < prob[j])
                marked.push_back(j);
        if (marked.size() < 2)
            continue;
        genes.clear();
        for (auto j : marked)
            genes.push_back(ranked[j][k]);
        std::shuffle(genes.begin(), genes.end(), rng);
        for (std::size_t m = 0; m < marked.size(); ++m)
            ranked[marked[m]][k] = genes[m];
    }
}

EvolutionResult evolve(const NEConfig& config, const Initializer& init, const FitnessFunction& fitness,
                       std::uint64_t seed, const GenerationCallback& on_generation)
{
    config.validate();
    const auto L = static_cast<std::size_t>(config.population_size);
    Rng rng(derive_seed(seed, 0, 0));

    std::vector<nn::ParamVector> population;
    population.reserve(L);
    for (std::size_t j = 0; j < L; ++j)
        population.push_back(init(rng));

    EvolutionResult result;
    result.best.fitness = kCulled;
    result.best_estimate.fitness = kCulled;
    bool have_best = false;

    for (int g = 0;; ++g) {
        // Common random numbers: every individual sees the same episode block.
        const std::uint64_t block = derive_seed(seed, 1, static_cast<std::uint64_t>(g));
        std::vector<FitnessEstimate> scores(L);
        parallel_for(L, [&](std::size_t j) { scores[j] = fitness(nn::as_span(population[j]), block); });

        std::vector<double> f(L);
        GenerationStats stats;
        stats.generation = g;
        double sum = 0.0;
        std::size_t feasible = 0;
        for (std::size_t j = 0; j < L; ++j) {
            f[j] = scores[j].fitness;
            sum += f[j];
            if (std::isfinite(scores[j].mean_power) && scores[j].mean_power <= config.power_budget)
                ++feasible;
        }
        const auto order = rank_population(f);
        stats.best = f[order.front()];
        stats.worst = f[order.back()];
        stats.mean = sum / static_cast<double>(L);
        stats.feasible_fraction = static_cast<double>(feasible) / static_cast<double>(L);
        if (!have_best || stats.best > *result.best.fitness) {
            result.best = {population[order.front()], stats.best};
            result.best_estimate = scores[order.front()];
            result.best_generation = g;
            have_best = true;
        }
        stats.best_so_far = *result.best.fitness;
        result.history.push_back(stats);
        if (on_generation)
            on_generation(stats, result.best);
        if (g == config.generations)
            break;

        const auto elites = static_cast<std::size_t>(config.elite_count);
        const auto parents = select_parents(f);
        std::vector<nn::ParamVector> next;
        next.reserve(L);
        for (std::size_t e = 0; e < elites; ++e)
            next.push_back(population[order[e]]);

        struct Child {
            nn::ParamVector params;
            std::size_t parent_rank_sum;
        };
        std::vector<Child> children;
        std::uniform_int_distribution<std::size_t> pick(0, parents.size() - 1);
        for (std::size_t c = elites; c < L; ++c) {
            const std::size_t a = pick(rng);
            std::size_t b = pick(rng);
            while (b == a)
                b = pick(rng);
            nn::ParamVector child = crossover(population[parents[a]], population[parents[b]], rng);
            mutate(child, config.p_mut, config.sigma_mut, rng);
            children.push_back({std::move(child), a + b});
        }
        // Offspring of better parents rank ahead in the permutation schedule.
        std::stable_sort(children.begin(), children.end(),
                         [](const Child& x, const Child& y) { return x.parent_rank_sum < y.parent_rank_sum; });
        for (auto& c : children)
            next.push_back(std::move(c.params));
        permute_synapses(next, rng, elites);
        population = std::move(next);
    }
    return result;
}

std::string generation_stats_csv_header() { return "generation,best,mean,worst,feasible_fraction,best_so_far"; }

std::string generation_stats_csv_row(const GenerationStats& s)
{
    std::ostringstream os;
    os.precision(17);
    os << s.generation << ',' << s.best << ',' << s.mean << ',' << s.worst << ',' << s.feasible_fraction << ','
       << s.best_so_far;
    return os.str();
}

} // namespace risloc::cosyne
