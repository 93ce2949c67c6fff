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

#include "risloc/baselines.hpp"

#include "risloc/checkpoint.hpp"
#include "risloc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace risloc {

namespace {

constexpr char kFingerprintMagic[] = "RISFPDB1";
constexpr std::uint32_t kFingerprintVersion = 1;

int block_span(double half_width) { return std::max(1, static_cast<int>(std::ceil(2.0 * half_width - 1e-9))); }

} // namespace

FingerprintGrid FingerprintGrid::for_region(const UeRegion& region)
{
    FingerprintGrid g;
    g.x_min = region.center.x - region.x_half;
    g.y_min = region.center.y - region.y_half;
    g.z = region.center.z;
    g.nx = block_span(region.x_half);
    g.ny = block_span(region.y_half);
    return g;
}

Position FingerprintGrid::center(int block) const
{
    if (block < 0 || block >= block_count())
        throw std::out_of_range("fingerprint block index out of range");
    return {x_min + (block % nx) + 0.5, y_min + (block / nx) + 0.5, z};
}

std::uint64_t profile_sequence_hash(const std::vector<RISProfile>& sequence)
{
    std::uint64_t h = fnv1a64(nullptr, 0);
    for (const auto& p : sequence) {
        const auto& idx = p.indices();
        h = fnv1a64(idx.data(), idx.size() * sizeof(std::uint16_t), h);
    }
    return h;
}

std::vector<RISProfile> fixed_profile_sequence(const Scenario& scenario, int horizon, Rng& rng)
{
    std::vector<RISProfile> seq;
    seq.reserve(static_cast<std::size_t>(horizon));
    for (int t = 0; t < horizon; ++t)
        seq.push_back(random_profile(scenario, rng));
    return seq;
}

nn::Vector rss_fingerprint(const Episode& episode, const AgentSetup& setup)
{
    nn::Vector v(episode.horizon());
    const double s2 = setup.input_scale * setup.input_scale;
    for (int t = 0; t < episode.horizon(); ++t)
        v(t) = std::norm(episode.observations[static_cast<std::size_t>(t)]) * s2;
    return v;
}

FingerprintDB build_fingerprint_db(const Experiment& exp, const std::vector<RISProfile>& sequence,
                                   int samples_per_block, bool uniform_power, bool average_samples,
                                   std::uint64_t seed)
{
    if (samples_per_block < 1)
        throw std::invalid_argument("samples per block must be >= 1");
    if (static_cast<int>(sequence.size()) != exp.config.rollout.horizon)
        throw std::invalid_argument("profile sequence length must equal the horizon");
    FingerprintDB db;
    db.grid = FingerprintGrid::for_region(exp.scenario.geometry().ue_region);
    db.horizon = exp.config.rollout.horizon;
    db.phase_count = static_cast<int>(exp.scenario.phases.size());
    db.sequence = sequence;
    db.sequence_hash = profile_sequence_hash(sequence);

    const int blocks = db.grid.block_count();
    const int per_block = average_samples ? 1 : samples_per_block;
    db.blocks.resize(static_cast<std::size_t>(blocks * per_block));
    db.fingerprints.resize(db.horizon, static_cast<Eigen::Index>(db.blocks.size()));
    const RolloutConfig cfg = exp.rollout(DecodeMode::Sample);

    parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
        const Position c = db.grid.center(static_cast<int>(b));
        nn::Vector sum = nn::Vector::Zero(db.horizon);
        for (int s = 0; s < samples_per_block; ++s) {
            Rng rng(derive_seed(seed, b, static_cast<std::uint64_t>(s)));
            OpenLoopController ctrl(sequence, exp.scenario.max_power(), uniform_power);
            const nn::Vector f = rss_fingerprint(run_controlled_episode(ctrl, cfg, exp.scenario, rng, c), exp.setup);
            if (average_samples) {
                sum += f;
            } else {
                const auto col = static_cast<Eigen::Index>(b) * per_block + s;
                db.fingerprints.col(col) = f;
                db.blocks[static_cast<std::size_t>(col)] = static_cast<std::uint32_t>(b);
            }
        }
        if (average_samples) {
            db.fingerprints.col(static_cast<Eigen::Index>(b)) = sum / samples_per_block;
            db.blocks[b] = static_cast<std::uint32_t>(b);
        }
    });
    return db;
}

Position fingerprint_localize(const FingerprintDB& db, const nn::Vector& query, int k)
{
    if (k < 1)
        throw std::invalid_argument("k must be >= 1");
    if (db.size() < static_cast<std::size_t>(k))
        throw std::invalid_argument("fingerprint database has fewer than k entries");
    if (query.size() != db.fingerprints.rows())
        throw std::invalid_argument("query length does not match the fingerprint length");
    const nn::Vector d2 = (db.fingerprints.colwise() - query).colwise().squaredNorm().transpose();
    std::vector<std::size_t> idx(db.size());
    std::iota(idx.begin(), idx.end(), 0);
    const auto kk = static_cast<std::size_t>(k);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(kk), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          const double da = d2(static_cast<Eigen::Index>(a));
                          const double dbb = d2(static_cast<Eigen::Index>(b));
                          if (da != dbb)
                              return da < dbb;
                          return db.blocks[a] != db.blocks[b] ? db.blocks[a] < db.blocks[b] : a < b;
                      });
    Position m{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < kk; ++i) {
        const Position c = db.grid.center(static_cast<int>(db.blocks[idx[i]]));
        m.x += c.x;
        m.y += c.y;
        m.z += c.z;
    }
    const double n = static_cast<double>(kk);
    return {m.x / n, m.y / n, m.z / n};
}

std::string serialize_fingerprint_db(const FingerprintDB& db)
{
    std::string out(kFingerprintMagic, 8);
    put_u32(out, kFingerprintVersion);
    put_u32(out, static_cast<std::uint32_t>(db.horizon));
    const std::size_t n_ris = db.sequence.empty() ? 0 : db.sequence.front().size();
    put_u32(out, static_cast<std::uint32_t>(n_ris));
    put_u32(out, static_cast<std::uint32_t>(db.phase_count));
    put_f64(out, db.grid.x_min);
    put_f64(out, db.grid.y_min);
    put_f64(out, db.grid.z);
    put_u32(out, static_cast<std::uint32_t>(db.grid.nx));
    put_u32(out, static_cast<std::uint32_t>(db.grid.ny));
    put_u64(out, db.sequence_hash);
    for (const auto& p : db.sequence)
        for (auto i : p.indices())
            put_u16(out, i);
    put_u64(out, db.size());
    for (std::size_t j = 0; j < db.size(); ++j) {
        put_u32(out, db.blocks[j]);
        for (Eigen::Index t = 0; t < db.fingerprints.rows(); ++t)
            put_f64(out, db.fingerprints(t, static_cast<Eigen::Index>(j)));
    }
    return out;
}

FingerprintDB parse_fingerprint_db(const std::string& bytes)
{
    ByteReader r(bytes);
    if (r.raw(8) != std::string(kFingerprintMagic, 8))
        throw std::runtime_error("not a fingerprint database");
    if (r.u32() != kFingerprintVersion)
        throw std::runtime_error("unsupported fingerprint database version");
    FingerprintDB db;
    db.horizon = static_cast<int>(r.u32());
    const std::uint32_t n_ris = r.u32();
    db.phase_count = static_cast<int>(r.u32());
    if (db.horizon < 1 || n_ris < 1 || db.phase_count < 2)
        throw std::runtime_error("corrupt fingerprint database header");
    db.grid.x_min = r.f64();
    db.grid.y_min = r.f64();
    db.grid.z = r.f64();
    db.grid.nx = static_cast<int>(r.u32());
    db.grid.ny = static_cast<int>(r.u32());
    if (db.grid.nx < 1 || db.grid.ny < 1)
        throw std::runtime_error("corrupt fingerprint grid");
    db.sequence_hash = r.u64();
    for (int t = 0; t < db.horizon; ++t) {
        std::vector<std::uint16_t> idx(n_ris);
        for (auto& i : idx)
            i = r.u16();
        db.sequence.emplace_back(std::move(idx), static_cast<std::size_t>(db.phase_count));
    }
    if (profile_sequence_hash(db.sequence) != db.sequence_hash)
        throw std::runtime_error("fingerprint profile sequence does not match its hash");
    const std::uint64_t count = r.u64();
    const std::uint64_t record = 4 + 8 * static_cast<std::uint64_t>(db.horizon);
    if (count > (bytes.size() - r.position()) / record)
        throw std::runtime_error("truncated fingerprint database");
    db.blocks.resize(count);
    db.fingerprints.resize(db.horizon, static_cast<Eigen::Index>(count));
    for (std::uint64_t j = 0; j < count; ++j) {
        db.blocks[j] = r.u32();
        if (db.blocks[j] >= static_cast<std::uint32_t>(db.grid.block_count()))
            throw std::runtime_error("fingerprint block index out of range");
        for (int t = 0; t < db.horizon; ++t)
            db.fingerprints(t, static_cast<Eigen::Index>(j)) = r.f64();
    }
    if (!r.at_end())
        throw std::runtime_error("trailing bytes after fingerprint database");
    return db;
}

void write_fingerprint_db(const std::filesystem::path& path, const FingerprintDB& db)
{
    write_file_bytes(path, serialize_fingerprint_db(db));
}

FingerprintDB read_fingerprint_db(const std::filesystem::path& path)
{
    return parse_fingerprint_db(read_file_bytes(path));
}

EvaluationResult evaluate_fingerprint(const Experiment& exp, const FingerprintDB& db, std::size_t episodes,
                                      std::uint64_t seed, std::vector<Position> positions)
{
    if (profile_sequence_hash(db.sequence) != db.sequence_hash)
        throw std::runtime_error("fingerprint profile sequence was modified");
    const RolloutConfig cfg = exp.rollout(DecodeMode::Sample);
    const bool uniform = exp.config.fingerprint.query_uniform_power;
    const std::size_t n = positions.empty() ? episodes : positions.size();
    std::vector<Episode> eps(n);
    parallel_for(n, [&](std::size_t i) {
        Rng rng(derive_seed(seed, 0, i));
        OpenLoopController ctrl(db.sequence, exp.scenario.max_power(), uniform);
        std::optional<Position> at;
        if (!positions.empty())
            at = positions[i];
        eps[i] = run_controlled_episode(ctrl, cfg, exp.scenario, rng, at);
    });
    const int k = exp.config.fingerprint.k;
    return evaluate_episodes(eps, [&](const Episode& ep) {
        return fingerprint_localize(db, rss_fingerprint(ep, exp.setup), k);
    });
}

FingerprintRun fingerprint_baseline(const Experiment& exp)
{
    const auto& fp = exp.config.fingerprint;
    Rng rng(exp.seed(SeedStage::Fingerprint, 0));
    const auto sequence = fixed_profile_sequence(exp.scenario, exp.config.rollout.horizon, rng);
    FingerprintRun run;
    run.db = build_fingerprint_db(exp, sequence, fp.samples_per_block, fp.db_uniform_power, fp.average_samples,
                                  exp.seed(SeedStage::Fingerprint, 1));
    run.result = evaluate_fingerprint(exp, run.db, static_cast<std::size_t>(exp.config.plan.eval_episodes),
                                      exp.evaluation_seed());
    return run;
}

EvaluationResult evaluate_supervised(const Experiment& exp, const nn::ParamVector& params, std::size_t episodes,
                                     std::uint64_t seed)
{
    auto eps = collect_random_episodes(episodes, exp.rollout(DecodeMode::Sample), exp.scenario, seed);
    const nn::NetworkView view(exp.setup.supervised, nn::as_span(params));
    return evaluate_episodes(eps, [&](const Episode& ep) {
        return exp.setup.scaler.denormalize(view.feed_forward(0, flatten_observations(ep, exp.setup)));
    });
}

SupervisedBaseline train_supervised_baseline(const Experiment& exp)
{
    const auto& plan = exp.config.plan;
    auto eps = collect_random_episodes(static_cast<std::size_t>(plan.supervised_size),
                                       exp.rollout(DecodeMode::Sample), exp.scenario,
                                       exp.seed(SeedStage::Supervised, 0));
    const TrainingData data = flattened_data(eps, exp.setup);
    eps.clear();
    SupervisedBaseline b;
    b.model.report = train_supervised(exp.setup.supervised, data, plan.supervised, exp.seed(SeedStage::Supervised, 1));
    b.model.params = b.model.report.params;
    b.result = evaluate_supervised(exp, b.model.params, static_cast<std::size_t>(plan.eval_episodes),
                                   exp.evaluation_seed());
    return b;
}

SingleAgentRun single_agent_variant(const Experiment& exp, const nn::ParamVector& initial_estimator,
                                    const cosyne::GenerationCallback& on_generation)
{
    const auto& plan = exp.config.plan;
    const RolloutConfig cfg = exp.rollout(exp.config.rollout.decode);
    const auto init = [&](Rng& rng) { return nn::initialize_params(exp.setup.single_agent, rng); };
    const auto fitness = [&](std::span<const double> individual, std::uint64_t episode_seed) {
        return cosyne::evaluate_single_agent_fitness(exp.setup, individual, nn::as_span(initial_estimator), cfg,
                                                     exp.scenario, plan.ne, episode_seed);
    };
    SingleAgentRun run;
    run.evolution = cosyne::evolve(plan.ne, init, fitness, exp.seed(SeedStage::SingleAgent, 0), on_generation);
    run.policy = run.evolution.best.params;

    auto eps = collect_episodes(
        [&] { return std::make_unique<SingleAgentController>(exp.setup, nn::as_span(run.policy), cfg.decode); },
        static_cast<std::size_t>(plan.stage3_size), cfg, exp.scenario, exp.seed(SeedStage::SingleAgent, 1));
    const TrainingData data = sequence_data(eps, exp.setup);
    eps.clear();
    std::optional<nn::ParamVector> warm;
    if (plan.warm_start)
        warm = initial_estimator;
    run.estimator.report =
        train_supervised(exp.setup.estimator, data, plan.supervised, exp.seed(SeedStage::SingleAgent, 2), warm);
    run.estimator.params = run.estimator.report.params;
    return run;
}

EvaluationResult evaluate_single_agent(const Experiment& exp, const nn::ParamVector& policy,
                                       const nn::ParamVector& estimator, DecodeMode mode, std::size_t episodes,
                                       std::uint64_t seed)
{
    auto eps = collect_episodes(
        [&] { return std::make_unique<SingleAgentController>(exp.setup, nn::as_span(policy), mode); }, episodes,
        exp.rollout(mode), exp.scenario, seed);
    return evaluate_episodes(eps, lstm_estimator(exp.setup, nn::as_span(estimator)));
}

EvaluationResult uniform_power_reference(const Experiment& exp, const nn::ParamVector& estimator,
                                         std::size_t episodes, std::uint64_t seed)
{
    auto eps = collect_random_episodes(episodes, exp.rollout(DecodeMode::Sample), exp.scenario, seed);
    return evaluate_episodes(eps, lstm_estimator(exp.setup, nn::as_span(estimator)));
}

} // namespace risloc
