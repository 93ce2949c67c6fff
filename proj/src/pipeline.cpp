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

#include "risloc/pipeline.hpp"

#include "risloc/baselines.hpp"
#include "risloc/parallel.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <stdexcept>

namespace risloc {

Experiment::Experiment(ExperimentConfig cfg)
    : config(std::move(cfg)), scenario(config.scenario()), setup(config.agent_setup())
{
    validate_config(config);
}

RolloutConfig Experiment::rollout(DecodeMode mode) const
{
    RolloutConfig r = config.rollout;
    r.decode = mode;
    return r;
}

PolicyPair split_individual(const AgentSetup& setup, std::span<const double> individual)
{
    const std::size_t np = setup.policy.parameter_count();
    if (individual.size() != np + setup.power.parameter_count())
        throw std::invalid_argument("individual length does not match [w_policy, w_power]");
    PolicyPair pair;
    pair.policy = Eigen::Map<const nn::ParamVector>(individual.data(), static_cast<Eigen::Index>(np));
    pair.power = Eigen::Map<const nn::ParamVector>(individual.data() + np,
                                                   static_cast<Eigen::Index>(individual.size() - np));
    return pair;
}

nn::ParamVector concatenate(const PolicyPair& pair)
{
    nn::ParamVector out(pair.policy.size() + pair.power.size());
    out << pair.policy, pair.power;
    return out;
}

std::uint64_t params_hash(std::span<const double> params)
{
    return fnv1a64(params.data(), params.size() * sizeof(double));
}

std::vector<Episode> stage1_dataset(const Experiment& exp)
{
    return collect_random_episodes(static_cast<std::size_t>(exp.config.plan.stage1_size),
                                   exp.rollout(exp.config.rollout.decode), exp.scenario,
                                   exp.seed(SeedStage::Stage1Data));
}

std::vector<Episode> stage3_dataset(const Experiment& exp, const PolicyPair& pair)
{
    const RolloutConfig cfg = exp.rollout(exp.config.rollout.decode);
    return collect_episodes(
        [&] { return std::make_unique<MultiAgentController>(exp.setup, nn::as_span(pair.policy),
                                                            nn::as_span(pair.power), cfg.decode); },
        static_cast<std::size_t>(exp.config.plan.stage3_size), cfg, exp.scenario, exp.seed(SeedStage::Stage3Data));
}

EstimatorTraining train_estimator(const Experiment& exp, const std::vector<Episode>& episodes, std::uint64_t seed,
                                  const std::optional<nn::ParamVector>& warm_start)
{
    EstimatorTraining r;
    r.report = train_supervised(exp.setup.estimator, sequence_data(episodes, exp.setup), exp.config.plan.supervised,
                                seed, warm_start);
    r.params = r.report.params;
    return r;
}

Stage1Result stage1_train_initial_estimator(const Experiment& exp, const std::vector<Episode>& episodes)
{
    Stage1Result r;
    r.estimator = train_estimator(exp, episodes, exp.seed(SeedStage::Stage1Train));
    r.reference = uniform_power_reference(exp, r.estimator.params,
                                          static_cast<std::size_t>(exp.config.plan.eval_episodes),
                                          exp.evaluation_seed());
    return r;
}

Stage1Result stage1_train_initial_estimator(const Experiment& exp)
{
    return stage1_train_initial_estimator(exp, stage1_dataset(exp));
}

Stage2Result stage2_evolve_policies(const Experiment& exp, const nn::ParamVector& initial_estimator,
                                    const cosyne::GenerationCallback& on_generation)
{
    if (initial_estimator.size() != static_cast<Eigen::Index>(exp.setup.estimator.parameter_count()))
        throw std::invalid_argument("initial estimator does not match the estimator architecture");
    Stage2Result r;
    r.estimator_hash_before = params_hash(nn::as_span(initial_estimator));

    const RolloutConfig cfg = exp.rollout(exp.config.rollout.decode);
    const auto& ne = exp.config.plan.ne;
    const auto init = [&](Rng& rng) {
        return concatenate({nn::initialize_params(exp.setup.policy, rng), nn::initialize_params(exp.setup.power, rng)});
    };
    const auto fitness = [&](std::span<const double> individual, std::uint64_t episode_seed) {
        return cosyne::evaluate_fitness(exp.setup, individual, nn::as_span(initial_estimator), cfg, exp.scenario, ne,
                                        episode_seed);
    };
    r.evolution = cosyne::evolve(ne, init, fitness, exp.seed(SeedStage::Stage2Evolve), on_generation);
    r.pair = split_individual(exp.setup, nn::as_span(r.evolution.best.params));

    r.estimator_hash_after = params_hash(nn::as_span(initial_estimator));
    if (r.estimator_hash_after != r.estimator_hash_before)
        throw std::logic_error("stage 2 modified the initial estimator");
    return r;
}

EstimatorTraining stage3_retrain_estimator(const Experiment& exp, const std::vector<Episode>& episodes,
                                           const nn::ParamVector& initial_estimator)
{
    std::optional<nn::ParamVector> warm;
    if (exp.config.plan.warm_start)
        warm = initial_estimator;
    return train_estimator(exp, episodes, exp.seed(SeedStage::Stage3Train), warm);
}

EstimatorTraining stage3_retrain_estimator(const Experiment& exp, const PolicyPair& pair,
                                           const nn::ParamVector& initial_estimator)
{
    return stage3_retrain_estimator(exp, stage3_dataset(exp, pair), initial_estimator);
}

EvaluationResult evaluate_ma(const Experiment& exp, const PolicyPair& pair, const nn::ParamVector& estimator,
                             DecodeMode mode, std::size_t episodes, std::uint64_t seed)
{
    return evaluate_rmse(exp.setup, nn::as_span(pair.policy), nn::as_span(pair.power), nn::as_span(estimator),
                         episodes, exp.rollout(mode), exp.scenario, seed);
}

double audit_power(const Experiment& exp, const PolicyPair& pair, DecodeMode mode, std::size_t episodes,
                   std::uint64_t seed)
{
    const auto eps = collect_episodes(
        [&] { return std::make_unique<MultiAgentController>(exp.setup, nn::as_span(pair.policy),
                                                            nn::as_span(pair.power), mode); },
        episodes, exp.rollout(mode), exp.scenario, seed);
    double total = 0.0;
    for (const auto& ep : eps)
        total += episode_power_total(ep);
    return total / static_cast<double>(eps.size());
}

PipelineArtifacts run_pipeline(const Experiment& exp, const cosyne::GenerationCallback& on_generation)
{
    PipelineArtifacts a;
    a.stage1 = stage1_train_initial_estimator(exp);
    a.stage2 = stage2_evolve_policies(exp, a.stage1.estimator.params, on_generation);
    a.stage3 = stage3_retrain_estimator(exp, a.stage2.pair, a.stage1.estimator.params);
    return a;
}

std::string results_csv_header() { return "method,n_ris,noise_dbm,format,rmse_m,mean_power,budget_ok,seed"; }

std::string results_csv_row(const ResultRow& row)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%d,%.10g,%s,%.10g,%.10g,%d,%llu", row.method.c_str(), row.n_ris,
                  row.noise_dbm, to_string(row.format).c_str(), row.rmse_m, row.mean_power, row.budget_ok ? 1 : 0,
                  static_cast<unsigned long long>(row.seed));
    return buf;
}

std::string results_csv(const std::vector<ResultRow>& rows)
{
    std::string out = results_csv_header() + "\n";
    for (const auto& r : rows)
        out += results_csv_row(r) + "\n";
    return out;
}

std::vector<ResultRow> evaluate_point(const Experiment& exp, const std::vector<std::string>& methods)
{
    const std::set<std::string> want(methods.begin(), methods.end());
    for (const auto& m : want)
        if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end())
            throw std::invalid_argument("unknown method '" + m + "'");
    const auto has = [&](const char* m) { return want.count(m) > 0; };
    const auto& cfg = exp.config;
    const auto n_eval = static_cast<std::size_t>(cfg.plan.eval_episodes);
    const std::uint64_t eval_seed = exp.evaluation_seed();
    const double budget = cfg.plan.ne.power_budget;

    const auto row = [&](const std::string& method, const EvaluationResult& r) {
        ResultRow out;
        out.method = method;
        out.n_ris = cfg.geometry.n_ris();
        out.noise_dbm = cfg.channel.noise_power_dbm;
        out.format = cfg.rollout.format;
        out.rmse_m = r.rmse_m;
        out.mean_power = r.mean_power;
        out.budget_ok = r.mean_power <= kBudgetSlack * budget;
        out.seed = cfg.seed;
        return out;
    };

    std::vector<ResultRow> rows;
    std::optional<Stage1Result> stage1;
    if (has("ma-sample") || has("ma-argmax") || has("single-agent") || has("uniform"))
        stage1 = stage1_train_initial_estimator(exp);

    if (has("ma-sample") || has("ma-argmax")) {
        const Stage2Result s2 = stage2_evolve_policies(exp, stage1->estimator.params);
        const EstimatorTraining s3 = stage3_retrain_estimator(exp, s2.pair, stage1->estimator.params);
        if (has("ma-sample"))
            rows.push_back(row("ma-sample", evaluate_ma(exp, s2.pair, s3.params, DecodeMode::Sample, n_eval, eval_seed)));
        if (has("ma-argmax"))
            rows.push_back(row("ma-argmax", evaluate_ma(exp, s2.pair, s3.params, DecodeMode::Argmax, n_eval, eval_seed)));
    }
    if (has("single-agent")) {
        const SingleAgentRun sa = single_agent_variant(exp, stage1->estimator.params);
        rows.push_back(row("single-agent", evaluate_single_agent(exp, sa.policy, sa.estimator.params,
                                                                 cfg.plan.eval_decode, n_eval, eval_seed)));
    }
    if (has("supervised"))
        rows.push_back(row("supervised", train_supervised_baseline(exp).result));
    if (has("fingerprint"))
        rows.push_back(row("fingerprint", fingerprint_baseline(exp).result));
    if (has("uniform"))
        rows.push_back(row("uniform", stage1->reference));
    return rows;
}

std::vector<ResultRow> run_sweep(const ExperimentConfig& config, const SweepProgress& progress)
{
    const auto& plan = config.plan;
    std::vector<ResultRow> rows;
    for (int n_ris : plan.sweep_n_ris)
        for (double noise : plan.sweep_noise_dbm)
            for (auto format : plan.sweep_formats) {
                const Experiment exp(config.with_point(n_ris, noise, format));
                for (auto& r : evaluate_point(exp, plan.sweep_methods)) {
                    if (progress)
                        progress(r);
                    rows.push_back(std::move(r));
                }
            }
    return rows;
}

} // namespace risloc
