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

#include "risloc/supervised.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace risloc {

namespace {

TrainingData select_columns(const TrainingData& data, const std::vector<Eigen::Index>& cols)
{
    TrainingData out;
    const auto n = static_cast<Eigen::Index>(cols.size());
    for (const auto& step : data.steps) {
        nn::Matrix m(step.rows(), n);
        for (Eigen::Index j = 0; j < n; ++j)
            m.col(j) = step.col(cols[static_cast<std::size_t>(j)]);
        out.steps.push_back(std::move(m));
    }
    out.targets.resize(data.targets.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j)
        out.targets.col(j) = data.targets.col(cols[static_cast<std::size_t>(j)]);
    return out;
}

double dataset_loss(const nn::ArchitectureSpec& spec, const nn::ParamVector& params, const TrainingData& data)
{
    if (data.size() == 0)
        return 0.0;
    const nn::Matrix pred = nn::forward_pooled(spec, nn::as_span(params), data.steps);
    return (pred - data.targets).squaredNorm() / static_cast<double>(pred.size());
}

} // namespace

TrainingData sequence_data(const std::vector<Episode>& episodes, const AgentSetup& setup)
{
    if (episodes.empty())
        throw std::invalid_argument("empty training set");
    const auto T = static_cast<std::size_t>(episodes.front().horizon());
    const auto N = static_cast<Eigen::Index>(episodes.size());
    const int dim = observation_dim(setup.format);
    TrainingData d;
    d.steps.assign(T, nn::Matrix(dim, N));
    d.targets.resize(3, N);
    for (Eigen::Index j = 0; j < N; ++j) {
        const auto& ep = episodes[static_cast<std::size_t>(j)];
        if (static_cast<std::size_t>(ep.horizon()) != T)
            throw std::invalid_argument("episodes differ in horizon");
        for (std::size_t t = 0; t < T; ++t)
            d.steps[t].col(j) = setup.encode(ep.observations[t]);
        d.targets.col(j) = setup.scaler.normalize(ep.true_position);
    }
    return d;
}

nn::Vector flatten_observations(const Episode& episode, const AgentSetup& setup)
{
    const int dim = observation_dim(setup.format);
    nn::Vector v(dim * episode.horizon());
    for (int t = 0; t < episode.horizon(); ++t)
        v.segment(t * dim, dim) = setup.encode(episode.observations[static_cast<std::size_t>(t)]);
    return v;
}

TrainingData flattened_data(const std::vector<Episode>& episodes, const AgentSetup& setup)
{
    if (episodes.empty())
        throw std::invalid_argument("empty training set");
    const auto N = static_cast<Eigen::Index>(episodes.size());
    const int T = episodes.front().horizon();
    TrainingData d;
    d.steps.assign(1, nn::Matrix(observation_dim(setup.format) * T, N));
    d.targets.resize(3, N);
    for (Eigen::Index j = 0; j < N; ++j) {
        const auto& ep = episodes[static_cast<std::size_t>(j)];
        if (ep.horizon() != T)
            throw std::invalid_argument("episodes differ in horizon");
        d.steps[0].col(j) = flatten_observations(ep, setup);
        d.targets.col(j) = setup.scaler.normalize(ep.true_position);
    }
    return d;
}

TrainingReport train_supervised(const nn::ArchitectureSpec& spec, const TrainingData& data,
                                const SupervisedConfig& config, std::uint64_t seed,
                                const std::optional<nn::ParamVector>& warm_start)
{
    if (config.epochs < 1 || config.batch_size < 1 || !(config.learning_rate > 0.0))
        throw std::invalid_argument("invalid supervised training settings");
    if (!(config.validation_fraction >= 0.0 && config.validation_fraction < 1.0))
        throw std::invalid_argument("validation fraction must lie in [0, 1)");
    Rng rng(seed);
    const Eigen::Index N = data.size();
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(N));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction * static_cast<double>(N)));
    std::vector<Eigen::Index> val_idx(perm.end() - static_cast<std::ptrdiff_t>(n_val), perm.end());
    std::vector<Eigen::Index> train_idx(perm.begin(), perm.end() - static_cast<std::ptrdiff_t>(n_val));
    if (train_idx.empty())
        throw std::invalid_argument("training split is empty");
    const TrainingData val = select_columns(data, val_idx);

    TrainingReport report;
    nn::ParamVector params = warm_start ? *warm_start : nn::initialize_params(spec, rng);
    if (static_cast<std::size_t>(params.size()) != spec.parameter_count())
        throw std::invalid_argument("warm-start parameters do not match architecture");
    nn::AdamOptimizer adam(static_cast<std::size_t>(params.size()),
                           nn::AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8});
    report.params = params;
    report.best_val_loss = std::numeric_limits<double>::infinity();

    const auto B = static_cast<std::size_t>(config.batch_size);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < train_idx.size(); start += B) {
            const std::size_t end = std::min(train_idx.size(), start + B);
            const std::vector<Eigen::Index> cols(train_idx.begin() + static_cast<std::ptrdiff_t>(start),
                                                 train_idx.begin() + static_cast<std::ptrdiff_t>(end));
            const TrainingData batch = select_columns(data, cols);
            const auto lg = nn::backward_bptt(spec, nn::as_span(params), batch.steps, batch.targets);
            adam.step(params, lg.gradient);
            epoch_loss += lg.loss * static_cast<double>(end - start);
        }
        epoch_loss /= static_cast<double>(train_idx.size());
        if (!std::isfinite(epoch_loss) || !params.allFinite())
            throw nn::NumericalError("supervised training diverged at epoch " + std::to_string(epoch + 1));
        report.train_loss.push_back(epoch_loss);
        // Without a validation split the training loss stands in.
        const double vloss = val.size() > 0 ? dataset_loss(spec, params, val) : epoch_loss;
        report.val_loss.push_back(vloss);
        if (vloss < report.best_val_loss) {
            report.best_val_loss = vloss;
            report.best_epoch = epoch;
            report.params = params;
        }
    }
    return report;
}

} // namespace risloc
