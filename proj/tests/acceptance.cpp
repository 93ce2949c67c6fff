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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Informational numbers follow each line.

#include "test_support.hpp"

#include "risloc/baselines.hpp"
#include "risloc/parallel.hpp"
#include "risloc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace risloc;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and sizes.
constexpr int kGradDraws = 100;
constexpr double kGradEps = 1e-5;
constexpr double kGradTol = 1e-4;
constexpr int kGradPerBlock = 20;
constexpr int kGradStratified = 100;
constexpr int kGradBatch = 4;
constexpr double kGradSeconds = 60.0;

constexpr int kSignalTriples = 10000;
constexpr double kSignalTol = 1e-12;
constexpr double kNoiseVarTol = 0.05; // 5 sigma of the variance estimate at 1e4 samples
constexpr double kNoiseMeanTol = 0.05;

constexpr int kConstraintDraws = 10000;
constexpr double kSoftmaxTol = 1e-9;

constexpr int kFitnessFuzz = 10000;

constexpr int kSeeds = 10;
constexpr int kImprovedSeedsRequired = 9;
constexpr double kEvolveMinutesTarget = 30.0;
constexpr int kAuditMultiplier = 10;

constexpr double kFingerprintBound = 2.0;

int failures = 0;

// ctest hides the output of passing tests, so every line is also kept in
// acceptance_report.txt next to the binary's working directory.
std::ofstream report("acceptance_report.txt");

void emit(const std::string& line)
{
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    report << line << '\n' << std::flush;
}

struct Clock {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void property(const char* name, bool pass, const std::string& detail)
{
    emit(std::string(pass ? "PASS" : "FAIL") + " [property] " + name + ": " + detail);
    if (!pass)
        ++failures;
}

void verdict(int id, const char* name, bool pass, const std::string& detail)
{
    emit(std::string(pass ? "PASS" : "FAIL") + " [" + std::to_string(id) + "] " + name + ": " + detail);
    if (!pass)
        ++failures;
}

void info(const std::string& line)
{
    emit("     " + line);
}

std::string fmt(const char* f, double a)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ExperimentConfig desk(std::uint64_t seed)
{
    ExperimentConfig c = preset_config("desk");
    c.seed = seed;
    c.resolve();
    validate_config(c);
    return c;
}

// ---------------------------------------------------------------------------

/// Index sets of every weight matrix and bias vector in the flat layout.
std::vector<std::vector<Eigen::Index>> parameter_blocks(const nn::ArchitectureSpec& spec)
{
    const auto count = static_cast<Eigen::Index>(spec.parameter_count());
    nn::ParamVector ids(count);
    for (Eigen::Index i = 0; i < count; ++i)
        ids(i) = static_cast<double>(i);
    const auto w = nn::unflatten(spec, nn::as_span(ids));
    std::vector<std::vector<Eigen::Index>> blocks;
    const auto add = [&](const auto& m) {
        std::vector<Eigen::Index> b;
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                b.push_back(static_cast<Eigen::Index>(m(r, c)));
        blocks.push_back(std::move(b));
    };
    for (const auto& l : w.lstm) {
        add(l.w);
        add(l.b);
    }
    for (const auto& h : w.heads)
        for (const auto& d : h) {
            add(d.w);
            add(d.b);
        }
    return blocks;
}

struct GradStats {
    double max_rel = 0.0;
    std::size_t checked = 0;
};

GradStats gradient_check(const nn::ArchitectureSpec& spec, int steps, bool all_coordinates, std::uint64_t seed)
{
    const auto blocks = parameter_blocks(spec);
    const auto count = static_cast<Eigen::Index>(spec.parameter_count());
    const int out = spec.head_output_dim(0);
    std::vector<GradStats> per(kGradDraws);
    parallel_for(kGradDraws, [&](std::size_t d) {
        Rng rng(derive_seed(seed, 0, d));
        const nn::ParamVector params = nn::initialize_params(spec, rng);
        std::normal_distribution<double> n01;
        nn::SequenceBatch in(static_cast<std::size_t>(steps), nn::Matrix(spec.input_dim, kGradBatch));
        for (auto& m : in)
            for (Eigen::Index i = 0; i < m.size(); ++i)
                m.data()[i] = n01(rng);
        nn::Matrix targets(out, kGradBatch);
        for (Eigen::Index i = 0; i < targets.size(); ++i)
            targets.data()[i] = n01(rng);

        std::vector<Eigen::Index> coords;
        if (all_coordinates) {
            for (Eigen::Index k = 0; k < count; ++k)
                coords.push_back(k);
        } else {
            for (const auto& b : blocks) {
                if (static_cast<int>(b.size()) <= kGradPerBlock) {
                    coords.insert(coords.end(), b.begin(), b.end());
                    continue;
                }
                std::uniform_int_distribution<std::size_t> pick(0, b.size() - 1);
                for (int i = 0; i < kGradPerBlock; ++i)
                    coords.push_back(b[pick(rng)]);
            }
            const Eigen::Index stride = count / kGradStratified;
            for (int s = 0; s < kGradStratified; ++s) {
                std::uniform_int_distribution<Eigen::Index> pick(s * stride, (s + 1) * stride - 1);
                coords.push_back(pick(rng));
            }
        }

        const auto g = nn::backward_bptt(spec, nn::as_span(params), in, targets);
        for (const auto k : coords) {
            const double fd = testing::finite_difference(spec, params, in, targets, k, kGradEps);
            per[d].max_rel = std::max(per[d].max_rel, testing::relative_error(g.gradient(k), fd));
        }
        per[d].checked = coords.size();
    });
    GradStats s;
    for (const auto& p : per) {
        s.max_rel = std::max(s.max_rel, p.max_rel);
        s.checked += p.checked;
    }
    return s;
}

void criterion_gradients()
{
    Clock clock;
    const Experiment exp(desk(0));
    const auto est = gradient_check(exp.setup.estimator, exp.config.rollout.horizon, false, 101);
    const auto sup = gradient_check(exp.setup.supervised, 1, true, 102);
    const double secs = clock.seconds();
    const bool pass = est.max_rel < kGradTol && sup.max_rel < kGradTol && secs < kGradSeconds;
    std::ostringstream s;
    s << "estimator max rel err " << fmt("%.3e", est.max_rel) << " over " << est.checked << " coordinates ("
      << exp.setup.estimator.parameter_count() << " params), supervised max rel err " << fmt("%.3e", sup.max_rel)
      << " over " << sup.checked << " coordinates, " << kGradDraws << " draws each, " << fmt("%.1f", secs)
      << " s (limits " << kGradTol << ", " << kGradSeconds << " s)";
    verdict(1, "gradient correctness", pass, s.str());
}

// ---------------------------------------------------------------------------

void criterion_signal()
{
    Clock clock;
    const Experiment exp(desk(0));
    const PhaseSet quad({0.0, 0.5, 1.0, 1.5});
    double worst = 0.0;
    for (int i = 0; i < kSignalTriples; ++i) {
        Rng rng(derive_seed(201, 0, static_cast<std::uint64_t>(i)));
        ChannelParams p = exp.scenario.params();
        p.noise_enabled = false;
        p.power_scaling = i % 2 ? PowerScaling::Literal : PowerScaling::Sqrt;
        const PhaseSet& phases = i % 3 == 0 ? quad : exp.scenario.phases;
        const Position ue = sample_ue_position(exp.scenario.geometry(), rng);
        const auto real = exp.scenario.channel.sample(ue, rng);
        std::vector<std::uint16_t> idx(static_cast<std::size_t>(exp.scenario.n_ris()));
        std::uniform_int_distribution<int> level(0, static_cast<int>(phases.size()) - 1);
        for (auto& v : idx)
            v = static_cast<std::uint16_t>(level(rng));
        const RISProfile profile(idx, phases.size());
        const double power = std::uniform_real_distribution<double>(0.0, p.max_power_watt)(rng);

        const cplx y = synthesize_observation(real, profile, phases, power, p, rng);
        std::vector<double> theta;
        for (auto v : idx)
            theta.push_back(phases[v]);
        const cplx o = testing::brute_force_signal(real.h_direct, real.h_bs_ris, real.h_ris_ue, theta, power,
                                                   p.power_scaling == PowerScaling::Sqrt);
        const double rel = std::abs(y - o) / std::max(std::abs(o), std::numeric_limits<double>::min());
        worst = std::max(worst, o == cplx{} && y == cplx{} ? 0.0 : rel);
    }

    // Noise statistics: y - noiseless over fresh draws.
    const ChannelParams& p = exp.scenario.params();
    const double n0 = p.noise_power_watt();
    Rng rng(202);
    const auto real = exp.scenario.channel.sample(exp.config.geometry.ue_region.center, rng);
    const RISProfile profile = RISProfile::zeros(exp.scenario.n_ris());
    const auto phi = phase_vector(profile, exp.scenario.phases);
    const cplx clean = noiseless_observation(real, phi, 0.5, p);
    cplx mean{};
    double var_re = 0.0, var_im = 0.0;
    for (int i = 0; i < kSignalTriples; ++i) {
        const cplx e = synthesize_observation(real, profile, exp.scenario.phases, 0.5, p, rng) - clean;
        mean += e;
        var_re += e.real() * e.real();
        var_im += e.imag() * e.imag();
    }
    mean /= kSignalTriples;
    var_re /= kSignalTriples;
    var_im /= kSignalTriples;
    const double var_err = std::abs((var_re + var_im) / n0 - 1.0);
    const double split_err = std::max(std::abs(2.0 * var_re / n0 - 1.0), std::abs(2.0 * var_im / n0 - 1.0));
    const double mean_err = std::abs(mean) / std::sqrt(n0);
    const bool pass = worst <= kSignalTol && var_err <= kNoiseVarTol && split_err <= 2.0 * kNoiseVarTol &&
                      mean_err <= kNoiseMeanTol;
    std::ostringstream s;
    s << kSignalTriples << " triples, max rel err " << fmt("%.3e", worst) << " (limit " << kSignalTol
      << "); noise var/N0 - 1 = " << fmt("%.4f", var_err) << ", per-component " << fmt("%.4f", split_err)
      << ", |mean|/sqrt(N0) = " << fmt("%.4f", mean_err) << ", " << fmt("%.2f", clock.seconds()) << " s";
    verdict(2, "signal model oracle", pass, s.str());
}

// ---------------------------------------------------------------------------

void criterion_constraints()
{
    Clock clock;
    std::vector<std::unique_ptr<Experiment>> setups;
    for (const auto& phases : {std::vector<double>{0.0, 1.0}, std::vector<double>{0.0, 0.5, 1.0, 1.5}})
        for (auto format : {ObservationFormat::Stacked, ObservationFormat::Rss}) {
            ExperimentConfig c = desk(0);
            c.phase_values = phases;
            c.rollout.format = format;
            setups.push_back(std::make_unique<Experiment>(c));
        }

    struct Tally {
        std::size_t bad_theta = 0, bad_power = 0, bad_softmax = 0, bad_bits = 0;
        double worst_softmax = 0.0;
        double max_power_seen = 0.0;
    };
    std::vector<Tally> tallies(kConstraintDraws);
    parallel_for(kConstraintDraws, [&](std::size_t i) {
        const Experiment& exp = *setups[i % setups.size()];
        Tally& t = tallies[i];
        Rng rng(derive_seed(301, 0, i));
        // Random gain stretches the draws from near-linear to saturated regimes.
        const double gain = std::pow(10.0, std::uniform_real_distribution<double>(-1.0, 1.5)(rng));
        const nn::ParamVector policy = gain * nn::initialize_params(exp.setup.policy, rng);
        const nn::ParamVector power = gain * nn::initialize_params(exp.setup.power, rng);
        const DecodeMode mode = (i / setups.size()) % 2 ? DecodeMode::Argmax : DecodeMode::Sample;
        MultiAgentController ctrl(exp.setup, nn::as_span(policy), nn::as_span(power), mode);
        const Episode ep = run_controlled_episode(ctrl, exp.rollout(mode), exp.scenario, rng);

        const auto& theta = exp.scenario.phases.values();
        for (const auto& prof : ep.profiles) {
            if (prof.size() != static_cast<std::size_t>(exp.scenario.n_ris()))
                ++t.bad_theta;
            const auto phi = phase_vector(prof, exp.scenario.phases);
            for (std::size_t k = 0; k < prof.size(); ++k) {
                const double th = exp.scenario.phases[prof[k]];
                if (prof[k] >= theta.size() || std::find(theta.begin(), theta.end(), th) == theta.end() ||
                    phi[k] != std::polar(1.0, std::numbers::pi * th))
                    ++t.bad_theta;
            }
        }
        for (double p : ep.powers) {
            if (!(p >= 0.0 && p <= exp.scenario.max_power()))
                ++t.bad_power;
            t.max_power_seen = std::max(t.max_power_seen, p);
        }

        PolicyAgent replay(exp.setup.policy, nn::as_span(policy), exp.scenario.n_ris(),
                           static_cast<int>(exp.scenario.phases.size()));
        for (const auto& y : ep.observations) {
            const auto out = replay.forward(exp.setup.encode(y));
            const auto probs = element_probabilities(out.ris_logits, exp.scenario.n_ris(),
                                                     static_cast<int>(exp.scenario.phases.size()));
            const std::size_t q = exp.scenario.phases.size();
            for (std::size_t e = 0; e < probs.size() / q; ++e) {
                double sum = 0.0;
                for (std::size_t k = 0; k < q; ++k) {
                    const double pk = probs[e * q + k];
                    if (!(pk >= 0.0 && pk <= 1.0))
                        ++t.bad_softmax;
                    sum += pk;
                }
                t.worst_softmax = std::max(t.worst_softmax, std::abs(sum - 1.0));
                if (!(std::abs(sum - 1.0) <= kSoftmaxTol))
                    ++t.bad_softmax;
            }
        }

        // One message per frame, each a single bit, and nothing else reaches the UE.
        if (ep.bits.size() != ep.observations.size() || !ep.exact_feedback.empty() || ctrl.ue_inputs() != ep.bits)
            ++t.bad_bits;
        for (auto b : ep.bits)
            if (b.value() > 1)
                ++t.bad_bits;
    });
    Tally total;
    for (const auto& t : tallies) {
        total.bad_theta += t.bad_theta;
        total.bad_power += t.bad_power;
        total.bad_softmax += t.bad_softmax;
        total.bad_bits += t.bad_bits;
        total.worst_softmax = std::max(total.worst_softmax, t.worst_softmax);
        total.max_power_seen = std::max(total.max_power_seen, t.max_power_seen);
    }
    const bool pass = total.bad_theta == 0 && total.bad_power == 0 && total.bad_softmax == 0 && total.bad_bits == 0;
    std::ostringstream s;
    s << kConstraintDraws << " episodes (binary and 4-level phases, stacked and RSS): theta violations "
      << total.bad_theta << ", power violations " << total.bad_power << " (max seen "
      << fmt("%.6f", total.max_power_seen) << " W), softmax violations " << total.bad_softmax << " (worst |sum-1| "
      << fmt("%.2e", total.worst_softmax) << "), feedback violations " << total.bad_bits << ", "
      << fmt("%.1f", clock.seconds()) << " s";
    verdict(3, "constraint suite", pass, s.str());
}

// ---------------------------------------------------------------------------

Episode hand_episode(std::vector<double> powers, Position truth, Position estimate)
{
    Episode ep;
    ep.true_position = truth;
    ep.estimate = estimate;
    ep.powers = std::move(powers);
    ep.observations.assign(ep.powers.size(), cplx{});
    return ep;
}

void criterion_fitness()
{
    cosyne::NEConfig ne;
    ne.power_budget = 2.5;

    // Over budget: total powers 3 and 4, mean 3.5 > 2.5.
    const std::vector<Episode> over = {hand_episode({1.0, 1.0, 1.0}, {0, 0, 0}, {3, 4, 0}),
                                       hand_episode({2.0, 2.0, 0.0}, {0, 0, 0}, {0, 0, 0})};
    const auto fo = cosyne::fitness_of_episodes(over, ne);
    // Within budget: totals 2 and 3, mean exactly 2.5; distances 5 and 13, mean 9.
    const std::vector<Episode> under = {hand_episode({0.5, 0.5, 1.0}, {1, 1, 1}, {4, 5, 1}),
                                        hand_episode({1.0, 1.0, 1.0}, {0, 0, 0}, {5, 12, 0})};
    const auto fu = cosyne::fitness_of_episodes(under, ne);
    const bool branches = fo.fitness == -3.5 && fo.mean_power == 3.5 && fu.fitness == -9.0 && fu.mean_distance == 9.0;

    Rng rng(401);
    std::uniform_real_distribution<double> pw(0.0, 1.0), coord(-50.0, 50.0);
    std::uniform_int_distribution<int> nep(1, 8), horizon(1, 10);
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t mismatched = 0;
    for (int i = 0; i < kFitnessFuzz; ++i) {
        const int n = nep(rng), t = horizon(rng);
        std::vector<Episode> eps;
        double p_sum = 0.0, d_sum = 0.0;
        for (int e = 0; e < n; ++e) {
            std::vector<double> powers(static_cast<std::size_t>(t));
            for (auto& p : powers)
                p = pw(rng);
            const Position a{coord(rng), coord(rng), coord(rng)}, b{coord(rng), coord(rng), coord(rng)};
            eps.push_back(hand_episode(powers, a, b));
            for (double p : powers)
                p_sum += p;
            d_sum += std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
        }
        ne.power_budget = std::uniform_real_distribution<double>(0.0, 0.6 * t)(rng);
        const auto f = cosyne::fitness_of_episodes(eps, ne);
        worst = std::max(worst, f.fitness);
        const double p_bar = p_sum / n, d_bar = d_sum / n;
        const double expect = p_bar > ne.power_budget ? -p_bar : -d_bar;
        if (std::abs(f.fitness - expect) > 1e-12 * std::max(1.0, std::abs(expect)))
            ++mismatched;
    }
    const bool pass = branches && worst <= 0.0 && mismatched == 0;
    std::ostringstream s;
    s << "over-budget fitness " << fo.fitness << " (expect -3.5), feasible fitness " << fu.fitness
      << " (expect -9); fuzz " << kFitnessFuzz << " cases, max fitness " << fmt("%.4g", worst)
      << ", oracle mismatches " << mismatched;
    verdict(4, "fitness branches", pass, s.str());
}

// ---------------------------------------------------------------------------

struct SeedRun {
    std::uint64_t seed = 0;
    std::vector<cosyne::GenerationStats> history;
    double evolve_seconds = 0.0;
    double audit_sample = 0.0, audit_argmax = 0.0, budget = 0.0;
    EvaluationResult ma_argmax, ma_sample, ma_initial, supervised, fingerprint, uniform, single_agent;
};

SeedRun run_seed(std::uint64_t seed)
{
    const Experiment exp(desk(seed));
    SeedRun r;
    r.seed = seed;
    r.budget = exp.config.plan.ne.power_budget;
    const auto s1 = stage1_train_initial_estimator(exp);
    Clock evolve_clock;
    const auto s2 = stage2_evolve_policies(exp, s1.estimator.params);
    r.evolve_seconds = evolve_clock.seconds();
    r.history = s2.evolution.history;
    const auto s3 = stage3_retrain_estimator(exp, s2.pair, s1.estimator.params);

    const auto n = static_cast<std::size_t>(exp.config.plan.eval_episodes);
    const auto eval_seed = exp.evaluation_seed();
    r.ma_argmax = evaluate_ma(exp, s2.pair, s3.params, DecodeMode::Argmax, n, eval_seed);
    r.ma_sample = evaluate_ma(exp, s2.pair, s3.params, DecodeMode::Sample, n, eval_seed);
    r.ma_initial = evaluate_ma(exp, s2.pair, s1.estimator.params, DecodeMode::Argmax, n, eval_seed);
    const auto audit_n = static_cast<std::size_t>(kAuditMultiplier * exp.config.plan.ne.episodes_per_eval);
    const auto audit_seed = exp.seed(SeedStage::Evaluation, 1);
    r.audit_sample = audit_power(exp, s2.pair, DecodeMode::Sample, audit_n, audit_seed);
    r.audit_argmax = audit_power(exp, s2.pair, DecodeMode::Argmax, audit_n, audit_seed);
    r.supervised = train_supervised_baseline(exp).result;
    r.fingerprint = fingerprint_baseline(exp).result;
    r.uniform = s1.reference;
    const auto sa = single_agent_variant(exp, s1.estimator.params);
    r.single_agent = evaluate_single_agent(exp, sa.policy, sa.estimator.params, DecodeMode::Argmax, n, eval_seed);
    return r;
}

void criteria_pipeline(const std::vector<SeedRun>& runs)
{
    // 5: improvement and monotone best-so-far.
    int improved = 0;
    bool monotone = true;
    double evolve_total = 0.0;
    for (const auto& r : runs) {
        for (std::size_t g = 1; g < r.history.size(); ++g)
            monotone = monotone && r.history[g].best_so_far >= r.history[g - 1].best_so_far;
        if (r.history.back().best_so_far > r.history.front().best)
            ++improved;
        evolve_total += r.evolve_seconds;
        info("seed " + std::to_string(r.seed) + ": gen-0 best " + fmt("%.4f", r.history.front().best) +
             ", final best " + fmt("%.4f", r.history.back().best_so_far) + ", gen-0 feasible fraction " +
             fmt("%.2f", r.history.front().feasible_fraction));
    }
    {
        const bool pass = monotone && improved >= kImprovedSeedsRequired;
        std::ostringstream s;
        s << "best-so-far non-decreasing in all seeds: " << (monotone ? "yes" : "no") << "; improved in " << improved
          << "/" << runs.size() << " seeds (need " << kImprovedSeedsRequired << "); evolution time "
          << fmt("%.1f", evolve_total / 60.0) << " min total (target < " << kEvolveMinutesTarget << ")";
        verdict(5, "neuroevolution improvement", pass, s.str());
    }

    // 6: power audit of the returned pair under both decodings.
    {
        bool pass = true;
        double worst = 0.0;
        for (const auto& r : runs) {
            const double ratio = std::max(r.audit_sample, r.audit_argmax) / r.budget;
            worst = std::max(worst, ratio);
            pass = pass && r.audit_sample <= kBudgetSlack * r.budget && r.audit_argmax <= kBudgetSlack * r.budget;
            info("seed " + std::to_string(r.seed) + ": audited mean power sample " + fmt("%.4f", r.audit_sample) +
                 ", argmax " + fmt("%.4f", r.audit_argmax) + " (B_P " + fmt("%.4f", r.budget) + ")");
        }
        std::ostringstream s;
        s << kAuditMultiplier << " x N_EP fresh episodes per seed, worst mean power / B_P = " << fmt("%.4f", worst)
          << " (limit " << kBudgetSlack << ")";
        verdict(6, "budget feasibility", pass, s.str());
    }

    // 7: ordering at the 10-seed median on paired held-out episodes.
    std::vector<double> ma, ma_s, sup, fp, uni, sa;
    for (const auto& r : runs) {
        ma.push_back(r.ma_argmax.rmse_m);
        ma_s.push_back(r.ma_sample.rmse_m);
        sup.push_back(r.supervised.rmse_m);
        fp.push_back(r.fingerprint.rmse_m);
        uni.push_back(r.uniform.rmse_m);
        sa.push_back(r.single_agent.rmse_m);
        info("seed " + std::to_string(r.seed) + ": RMSE MA argmax " + fmt("%.3f", r.ma_argmax.rmse_m) +
             ", MA sample " + fmt("%.3f", r.ma_sample.rmse_m) + ", supervised " + fmt("%.3f", r.supervised.rmse_m) +
             ", fingerprint " + fmt("%.3f", r.fingerprint.rmse_m) + ", uniform-power initial estimator " +
             fmt("%.3f", r.uniform.rmse_m) + ", single-agent " + fmt("%.3f", r.single_agent.rmse_m));
    }
    {
        const bool pass = median(ma) < median(sup);
        std::ostringstream s;
        s << "median RMSE MA (argmax) " << fmt("%.3f", median(ma)) << " m vs supervised " << fmt("%.3f", median(sup))
          << " m; MA (sample) " << fmt("%.3f", median(ma_s)) << " m, fingerprint " << fmt("%.3f", median(fp))
          << " m, uniform-power initial estimator " << fmt("%.3f", median(uni)) << " m";
        verdict(7, "ordering against the supervised baseline", pass, s.str());
    }

    // 9: single-agent variant, reported.
    {
        bool finite = true;
        for (double v : sa)
            finite = finite && std::isfinite(v);
        std::ostringstream s;
        s << "median RMSE single-agent " << fmt("%.3f", median(sa)) << " m beside MA " << fmt("%.3f", median(ma))
          << " m (reported, not asserted)";
        verdict(9, "single-agent variant", finite, s.str());
    }

    // Stage-level properties on the same paired held-out episodes.
    std::vector<double> initial;
    int evolved_wins = 0, retrain_wins = 0, supervised_wins = 0;
    // Uniform UE over a 2a x 2b rectangle: E||p - c||^2 = ((2a)^2 + (2b)^2) / 12.
    const UeRegion region = desk(0).geometry.ue_region;
    const double constant_center =
        std::sqrt((4.0 * region.x_half * region.x_half + 4.0 * region.y_half * region.y_half) / 12.0);
    for (const auto& r : runs) {
        initial.push_back(r.ma_initial.rmse_m);
        evolved_wins += r.ma_initial.rmse_m <= r.uniform.rmse_m;
        retrain_wins += r.ma_argmax.rmse_m <= r.ma_initial.rmse_m;
        supervised_wins += r.supervised.rmse_m < constant_center;
    }
    const auto of = [&](int wins) { return std::to_string(wins) + "/" + std::to_string(runs.size()) + " seeds"; };
    property("evolved sensing beats random sensing under the initial estimator", median(initial) <= median(uni),
             "median RMSE " + fmt("%.3f", median(initial)) + " m vs " + fmt("%.3f", median(uni)) + " m, holds in " +
                 of(evolved_wins));
    property("retrained estimator beats the initial estimator under the evolved agents", median(ma) <= median(initial),
             "median RMSE " + fmt("%.3f", median(ma)) + " m vs " + fmt("%.3f", median(initial)) + " m, holds in " +
                 of(retrain_wins));
    property("supervised baseline beats the constant-center predictor", median(sup) < constant_center,
             "median RMSE " + fmt("%.3f", median(sup)) + " m vs " + fmt("%.3f", constant_center) +
                 " m, holds in " + of(supervised_wins));
}

void criterion_formats()
{
    bool pass = true;
    std::ostringstream s;
    for (auto format : {ObservationFormat::Stacked, ObservationFormat::Rss}) {
        ExperimentConfig c = desk(0);
        c.rollout.format = format;
        const Experiment exp(c);
        const auto a = run_pipeline(exp);
        const auto r = evaluate_ma(exp, a.stage2.pair, a.stage3.params, DecodeMode::Argmax,
                                   static_cast<std::size_t>(c.plan.eval_episodes), exp.evaluation_seed());
        pass = pass && std::isfinite(r.rmse_m) && std::isfinite(r.mean_power);
        s << to_string(format) << " RMSE " << fmt("%.3f", r.rmse_m) << " m (input dim "
          << exp.setup.estimator.input_dim << "); ";
    }
    s << "formats differ only in rollout.format";
    verdict(8, "observation formats", pass, s.str());
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

bool run_cli_desk(const fs::path& run_dir, const char* threads, std::string& error)
{
    ::setenv("RISLOC_THREADS", threads, 1);
    const std::vector<std::string> steps = {"gen-data --csv",        "train-estimator",     "evolve",
                                            "retrain",               "eval",                "baseline fingerprint",
                                            "baseline supervised",   "baseline uniform",    "baseline single-agent"};
    for (const auto& step : steps) {
        const std::string cmd = std::string("\"") + RISLOC_CLI_PATH + "\" --preset desk --seed 3 --run-dir \"" +
                                run_dir.string() + "\" " + step + " > /dev/null 2> \"" +
                                (run_dir.parent_path() / "stderr.txt").string() + "\"";
        if (std::system(cmd.c_str()) != 0) {
            error = step + ": " + slurp(run_dir.parent_path() / "stderr.txt");
            ::unsetenv("RISLOC_THREADS");
            return false;
        }
    }
    ::unsetenv("RISLOC_THREADS");
    return true;
}

void criterion_reproducibility()
{
    Clock clock;
    const fs::path root = fs::temp_directory_path() / "risloc_acceptance_repro";
    fs::remove_all(root);
    const fs::path a = root / "a" / "run", b = root / "b" / "run";
    fs::create_directories(a.parent_path());
    fs::create_directories(b.parent_path());
    std::string error;
    bool pass = run_cli_desk(a, "1", error) && run_cli_desk(b, "4", error);
    std::size_t files = 0, differing = 0;
    std::vector<std::string> diff_names;
    if (pass) {
        std::map<std::string, fs::path> fa, fb;
        for (const auto& e : fs::directory_iterator(a))
            fa[e.path().filename().string()] = e.path();
        for (const auto& e : fs::directory_iterator(b))
            fb[e.path().filename().string()] = e.path();
        if (fa.size() != fb.size())
            pass = false;
        for (const auto& [name, path] : fa) {
            ++files;
            if (!fb.count(name) || slurp(path) != slurp(fb[name])) {
                ++differing;
                diff_names.push_back(name);
            }
        }
        pass = pass && differing == 0 && files > 0;
    }
    std::ostringstream s;
    if (!error.empty())
        s << "CLI failed: " << error;
    else
        s << files << " files (CSVs, checkpoints, datasets, manifest) compared across RISLOC_THREADS=1 and 4, "
          << differing << " differ";
    for (const auto& n : diff_names)
        s << " " << n;
    s << ", " << fmt("%.1f", clock.seconds()) << " s";
    verdict(10, "bit-identical double run", pass, s.str());
}

// ---------------------------------------------------------------------------

/// Largest block-center localization error of a database built and queried
/// at maximum power on the noiseless line-of-sight channel.
double worst_center_error(bool average_samples, double& rmse)
{
    ExperimentConfig c = desk(0);
    c.channel.noise_enabled = false;
    c.channel.ricean_kappa_db = std::numeric_limits<double>::infinity();
    c.fingerprint.db_uniform_power = false;
    c.fingerprint.query_uniform_power = false;
    c.fingerprint.average_samples = average_samples;
    const Experiment exp(c);
    const auto db = fingerprint_baseline(exp).db;
    const int blocks = db.grid.block_count();

    std::vector<double> err(static_cast<std::size_t>(blocks));
    parallel_for(err.size(), [&](std::size_t b) {
        OpenLoopController ctrl(db.sequence, exp.scenario.max_power(), false);
        Rng rng(derive_seed(501, 0, b));
        const Position centre = db.grid.center(static_cast<int>(b));
        const Episode ep = run_controlled_episode(ctrl, exp.rollout(DecodeMode::Sample), exp.scenario, rng, centre);
        const Position est = fingerprint_localize(db, rss_fingerprint(ep, exp.setup), c.fingerprint.k);
        err[b] = distance(est, centre);
    });
    std::vector<Position> centres;
    for (int b = 0; b < blocks; ++b)
        centres.push_back(db.grid.center(b));
    rmse = evaluate_fingerprint(exp, db, 0, 502, centres).rmse_m;
    return *std::max_element(err.begin(), err.end());
}

void criterion_fingerprint()
{
    const auto blocks = FingerprintGrid::for_region(desk(0).geometry.ue_region).block_count();
    double rmse = 0.0, avg_rmse = 0.0;
    const double worst = worst_center_error(false, rmse);
    const double avg_worst = worst_center_error(true, avg_rmse);

    // Averaged storage under the default noisy, faded channel, for reference only.
    ExperimentConfig avg = desk(0);
    avg.fingerprint.average_samples = true;
    const Experiment avg_exp(avg);
    const auto avg_run = fingerprint_baseline(avg_exp);

    std::ostringstream s;
    s << blocks << " block-center queries, max error " << fmt("%.4f", worst) << " m (bound " << kFingerprintBound
      << "), RMSE " << fmt("%.4f", rmse) << " m; averaged storage: max error " << fmt("%.4f", avg_worst)
      << " m, RMSE " << fmt("%.4f", avg_rmse) << " m, and on the default channel RMSE "
      << fmt("%.3f", avg_run.result.rmse_m) << " m (informational)";
    verdict(11, "fingerprinting sanity", worst <= kFingerprintBound, s.str());
}

} // namespace

int main(int argc, char** argv)
{
    // Optional arguments select criteria by number; no arguments runs all.
    std::vector<int> only;
    for (int i = 1; i < argc; ++i)
        only.push_back(std::atoi(argv[i]));
    const auto want = [&](std::initializer_list<int> ids) {
        if (only.empty())
            return true;
        for (int id : ids)
            if (std::find(only.begin(), only.end(), id) != only.end())
                return true;
        return false;
    };

    Clock total;
    if (want({1}))
        criterion_gradients();
    if (want({2}))
        criterion_signal();
    if (want({3}))
        criterion_constraints();
    if (want({4}))
        criterion_fitness();
    if (want({5, 6, 7, 9})) {
        std::vector<SeedRun> runs;
        for (int s = 0; s < kSeeds; ++s) {
            Clock c;
            runs.push_back(run_seed(static_cast<std::uint64_t>(s)));
            info("seed " + std::to_string(s) + " finished in " + fmt("%.1f", c.seconds()) + " s");
        }
        criteria_pipeline(runs);
    }
    if (want({8}))
        criterion_formats();
    if (want({10}))
        criterion_reproducibility();
    if (want({11}))
        criterion_fingerprint();

    emit(std::to_string(failures) + " criteria failed, " + fmt("%.1f", total.seconds() / 60.0) + " min total");
    return failures == 0 ? 0 : 1;
}
