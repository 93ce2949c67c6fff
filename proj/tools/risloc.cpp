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

// risloc command-line front-end. Every stage reads and writes artifacts in a
// run directory named after the config hash; see README.md for the layout.

#include "risloc/baselines.hpp"
#include "risloc/checkpoint.hpp"
#include "risloc/config.hpp"
#include "risloc/dataset.hpp"
#include "risloc/parallel.hpp"
#include "risloc/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace risloc;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kMissing = 3, kIntegrity = 4, kLocked = 5 };

struct CliError : std::runtime_error {
    CliError(std::string k, int c, const std::string& msg) : std::runtime_error(msg), kind(std::move(k)), code(c) {}
    std::string kind;
    int code;
};

int report(const std::string& kind, const std::string& message, int code, const std::string& field = {})
{
    json j = {{"error", kind}, {"message", message}, {"exit_code", code}};
    if (!field.empty())
        j["field"] = field;
    std::cerr << j.dump() << '\n';
    return code;
}

struct GlobalOptions {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string run_dir;
};

class RunDir {
public:
    explicit RunDir(const GlobalOptions& opt)
    {
        std::optional<std::string> preset;
        if (!opt.preset.empty())
            preset = opt.preset;
        config_ = opt.config_path.empty() ? parse_config_text("", preset) : parse_config(opt.config_path, preset);
        if (opt.seed) {
            config_.seed = *opt.seed;
            validate_config(config_);
        }
        if (const char* env = std::getenv("RISLOC_OUTPUT_DIR"); env && *env)
            config_.output_dir = env;
        hash_ = config_.hash();
        dir_ = opt.run_dir.empty() ? fs::path(config_.output_dir) / ("run-" + hash_) : fs::path(opt.run_dir);
        fs::create_directories(dir_);

        lock_ = dir_ / ".lock";
        std::FILE* f = std::fopen(lock_.c_str(), "wx");
        if (!f)
            throw CliError("locked", kLocked, "run directory is in use (remove " + lock_.string() + " if stale)");
        std::fclose(f);
        locked_ = true;

        const fs::path mpath = dir_ / "manifest.json";
        if (fs::exists(mpath)) {
            try {
                manifest_ = json::parse(read_file_bytes(mpath));
            } catch (const json::exception& e) {
                throw CliError("integrity", kIntegrity, "unreadable manifest.json: " + std::string(e.what()));
            }
            if (manifest_.value("config_hash", "") != hash_)
                throw CliError("config-hash-mismatch", kIntegrity,
                               "run directory belongs to config " + manifest_.value("config_hash", std::string("?")) +
                                   ", current config is " + hash_);
        } else {
            manifest_ = {{"config_hash", hash_}, {"artifacts", json::object()}, {"metrics", json::object()}};
        }
        write_file_bytes(dir_ / "config.json", config_.canonical_json() + "\n");
        experiment_ = std::make_unique<Experiment>(config_);
    }

    RunDir(const RunDir&) = delete;
    RunDir& operator=(const RunDir&) = delete;

    ~RunDir()
    {
        if (locked_) {
            std::error_code ec;
            fs::remove(lock_, ec);
        }
    }

    const Experiment& exp() const { return *experiment_; }
    const fs::path& dir() const { return dir_; }
    const std::string& hash() const { return hash_; }
    json& manifest() { return manifest_; }

    void save_manifest() { write_file_bytes(dir_ / "manifest.json", manifest_.dump(2) + "\n"); }

    void put(const std::string& name, const std::string& bytes)
    {
        write_file_bytes(dir_ / name, bytes);
        manifest_["artifacts"][name] = hex64(fnv1a64(bytes.data(), bytes.size()));
        save_manifest();
    }

    void put_checkpoint(const std::string& name, const nn::ArchitectureSpec& spec, const nn::ParamVector& params,
                        const std::string& kind)
    {
        Checkpoint c{spec, params, {{"config_hash", hash_}, {"kind", kind}}};
        put(name, serialize_checkpoint(c));
    }

    /// Path of an upstream artifact whose digest still matches the manifest.
    fs::path need(const std::string& name, const std::string& producer) const
    {
        const fs::path p = dir_ / name;
        if (!fs::exists(p))
            throw CliError("missing-artifact", kMissing, name + " not found in " + dir_.string() + "; run `" + producer +
                                                             "` first");
        const auto& arts = manifest_.at("artifacts");
        if (!arts.contains(name))
            throw CliError("integrity", kIntegrity, name + " is not recorded in the manifest");
        if (file_digest(p) != arts.at(name).get<std::string>())
            throw CliError("integrity", kIntegrity, name + " does not match its recorded digest");
        return p;
    }

    nn::ParamVector load_checkpoint(const std::string& name, const std::string& producer,
                                    const nn::ArchitectureSpec& spec) const
    {
        const Checkpoint c = read_checkpoint(need(name, producer));
        const auto it = c.meta.find("config_hash");
        if (it == c.meta.end() || it->second != hash_)
            throw CliError("config-hash-mismatch", kIntegrity, name + " was produced under a different config");
        if (c.architecture.parameter_count() != spec.parameter_count() ||
            c.params.size() != static_cast<Eigen::Index>(spec.parameter_count()))
            throw CliError("integrity", kIntegrity, name + " does not match the configured architecture");
        return c.params;
    }

    std::vector<Episode> load_dataset(const std::string& name, const std::string& producer) const
    {
        EpisodeDataset d = read_dataset(need(name, producer));
        return std::move(d.episodes);
    }

    void metric(const std::string& key, const json& value)
    {
        manifest_["metrics"][key] = value;
        save_manifest();
    }

private:
    ExperimentConfig config_;
    std::string hash_;
    fs::path dir_;
    fs::path lock_;
    bool locked_ = false;
    json manifest_;
    std::unique_ptr<Experiment> experiment_;
};

std::string loss_csv(const TrainingReport& r)
{
    std::ostringstream out;
    out.precision(10);
    out << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < r.train_loss.size(); ++e)
        out << e + 1 << ',' << r.train_loss[e] << ',' << (e < r.val_loss.size() ? r.val_loss[e] : 0.0) << '\n';
    return out.str();
}

std::string history_csv(const std::vector<cosyne::GenerationStats>& history)
{
    std::string out = cosyne::generation_stats_csv_header() + "\n";
    for (const auto& s : history)
        out += cosyne::generation_stats_csv_row(s) + "\n";
    return out;
}

EpisodeDataset as_dataset(const Experiment& exp, std::vector<Episode> episodes)
{
    return {exp.config.rollout.horizon, exp.config.geometry.n_ris(), static_cast<int>(exp.config.phase_values.size()),
            exp.config.rollout.format, std::move(episodes)};
}

ResultRow make_row(const Experiment& exp, const std::string& method, const EvaluationResult& r)
{
    const auto& c = exp.config;
    return {method,      c.geometry.n_ris(), c.channel.noise_power_dbm, c.rollout.format, r.rmse_m,
            r.mean_power, r.mean_power <= kBudgetSlack * c.plan.ne.power_budget, c.seed};
}

json eval_metric(const EvaluationResult& r) { return {{"rmse_m", r.rmse_m}, {"mean_power", r.mean_power}}; }

void emit_rows(RunDir& run, const std::string& file, const std::vector<ResultRow>& rows)
{
    const std::string csv = results_csv(rows);
    run.put(file, csv);
    std::cout << csv;
}

DecodeMode decode_option(const std::string& s, const Experiment& exp)
{
    if (s.empty())
        return exp.config.plan.eval_decode;
    if (s == "sample")
        return DecodeMode::Sample;
    if (s == "argmax")
        return DecodeMode::Argmax;
    throw CliError("usage", kUsage, "--decode must be sample or argmax");
}

void print_generation(const char* tag, const cosyne::GenerationStats& s)
{
    std::printf("[%s] generation %d best %.6g mean %.6g feasible %.2f best-so-far %.6g\n", tag, s.generation, s.best,
                s.mean, s.feasible_fraction, s.best_so_far);
    std::fflush(stdout);
}

// ---- subcommands -----------------------------------------------------------

void cmd_gen_data(RunDir& run, bool csv)
{
    const auto& exp = run.exp();
    EpisodeDataset d = as_dataset(exp, stage1_dataset(exp));
    run.put("stage1_data.bin", serialize_dataset(d));
    if (csv)
        run.put("stage1_data.csv", dataset_to_csv(d));
    std::printf("wrote %zu episodes to %s\n", d.episodes.size(), (run.dir() / "stage1_data.bin").c_str());
}

void cmd_train_estimator(RunDir& run)
{
    const auto& exp = run.exp();
    const auto episodes = run.load_dataset("stage1_data.bin", "gen-data");
    const Stage1Result r = stage1_train_initial_estimator(exp, episodes);
    run.put_checkpoint("estimator_initial.ckpt", exp.setup.estimator, r.estimator.params, "estimator-initial");
    run.put("stage1_loss.csv", loss_csv(r.estimator.report));
    run.metric("stage1", {{"best_val_loss", r.estimator.report.best_val_loss},
                          {"best_epoch", r.estimator.report.best_epoch},
                          {"reference", eval_metric(r.reference)}});
    std::printf("initial estimator: best validation loss %.6g at epoch %d, uniform-reference RMSE %.4f m\n",
                r.estimator.report.best_val_loss, r.estimator.report.best_epoch + 1, r.reference.rmse_m);
}

cosyne::GenerationCallback periodic_pair_saver(RunDir& run)
{
    const auto& exp = run.exp();
    const int every = exp.config.plan.checkpoint_every;
    return [&run, &exp, every](const cosyne::GenerationStats& s, const cosyne::Individual& best) {
        print_generation("evolve", s);
        if (s.generation % every == 0) {
            const PolicyPair p = split_individual(exp.setup, nn::as_span(best.params));
            run.put_checkpoint("ne_best_policy.ckpt", exp.setup.policy, p.policy, "policy-best-so-far");
            run.put_checkpoint("ne_best_power.ckpt", exp.setup.power, p.power, "power-best-so-far");
        }
    };
}

void cmd_evolve(RunDir& run)
{
    const auto& exp = run.exp();
    const auto est = run.load_checkpoint("estimator_initial.ckpt", "train-estimator", exp.setup.estimator);
    const Stage2Result r = stage2_evolve_policies(exp, est, periodic_pair_saver(run));
    run.put_checkpoint("policy.ckpt", exp.setup.policy, r.pair.policy, "policy");
    run.put_checkpoint("power.ckpt", exp.setup.power, r.pair.power, "power");
    run.put("ne_history.csv", history_csv(r.evolution.history));
    run.metric("evolve", {{"best_fitness", *r.evolution.best.fitness},
                          {"best_generation", r.evolution.best_generation},
                          {"best_mean_power", r.evolution.best_estimate.mean_power},
                          {"best_mean_distance", r.evolution.best_estimate.mean_distance}});
    std::printf("best fitness %.6g (generation %d)\n", *r.evolution.best.fitness, r.evolution.best_generation);
}

PolicyPair load_pair(const RunDir& run)
{
    const auto& exp = run.exp();
    return {run.load_checkpoint("policy.ckpt", "evolve", exp.setup.policy),
            run.load_checkpoint("power.ckpt", "evolve", exp.setup.power)};
}

void cmd_retrain(RunDir& run)
{
    const auto& exp = run.exp();
    const auto est = run.load_checkpoint("estimator_initial.ckpt", "train-estimator", exp.setup.estimator);
    const PolicyPair pair = load_pair(run);
    EpisodeDataset d = as_dataset(exp, stage3_dataset(exp, pair));
    run.put("stage3_data.bin", serialize_dataset(d));
    const EstimatorTraining r = stage3_retrain_estimator(exp, d.episodes, est);
    run.put_checkpoint("estimator_final.ckpt", exp.setup.estimator, r.params, "estimator-final");
    run.put("stage3_loss.csv", loss_csv(r.report));
    run.metric("stage3", {{"best_val_loss", r.report.best_val_loss}, {"best_epoch", r.report.best_epoch}});
    std::printf("final estimator: best validation loss %.6g at epoch %d\n", r.report.best_val_loss,
                r.report.best_epoch + 1);
}

EvaluationResult run_eval(const RunDir& run, DecodeMode mode)
{
    const auto& exp = run.exp();
    const PolicyPair pair = load_pair(run);
    const auto est = run.load_checkpoint("estimator_final.ckpt", "retrain", exp.setup.estimator);
    return evaluate_ma(exp, pair, est, mode, static_cast<std::size_t>(exp.config.plan.eval_episodes),
                       exp.evaluation_seed());
}

void cmd_eval(RunDir& run, const std::string& decode)
{
    const auto& exp = run.exp();
    const DecodeMode mode = decode_option(decode, exp);
    const EvaluationResult r = run_eval(run, mode);
    const std::string method = "ma-" + to_string(mode);
    run.metric("eval." + to_string(mode), eval_metric(r));
    emit_rows(run, "eval.csv", {make_row(exp, method, r)});
}

EvaluationResult run_baseline(RunDir& run, const std::string& which, bool store)
{
    const auto& exp = run.exp();
    const auto n = static_cast<std::size_t>(exp.config.plan.eval_episodes);
    if (which == "fingerprint") {
        if (!store)
            return evaluate_fingerprint(exp, read_fingerprint_db(run.need("fingerprint.db", "baseline fingerprint")),
                                        n, exp.evaluation_seed());
        FingerprintRun r = fingerprint_baseline(exp);
        run.put("fingerprint.db", serialize_fingerprint_db(r.db));
        return r.result;
    }
    if (which == "supervised") {
        if (!store)
            return evaluate_supervised(
                exp, run.load_checkpoint("supervised.ckpt", "baseline supervised", exp.setup.supervised), n,
                exp.evaluation_seed());
        SupervisedBaseline r = train_supervised_baseline(exp);
        run.put_checkpoint("supervised.ckpt", exp.setup.supervised, r.model.params, "supervised");
        run.put("supervised_loss.csv", loss_csv(r.model.report));
        return r.result;
    }
    if (which == "single-agent") {
        const DecodeMode mode = exp.config.plan.eval_decode;
        if (!store)
            return evaluate_single_agent(
                exp,
                run.load_checkpoint("single_agent_policy.ckpt", "baseline single-agent", exp.setup.single_agent),
                run.load_checkpoint("single_agent_estimator.ckpt", "baseline single-agent", exp.setup.estimator),
                mode, n, exp.evaluation_seed());
        const auto est = run.load_checkpoint("estimator_initial.ckpt", "train-estimator", exp.setup.estimator);
        SingleAgentRun r =
            single_agent_variant(
            exp, est, [](const cosyne::GenerationStats& s, const cosyne::Individual&) { print_generation("single-agent", s); });
        run.put_checkpoint("single_agent_policy.ckpt", exp.setup.single_agent, r.policy, "single-agent-policy");
        run.put_checkpoint("single_agent_estimator.ckpt", exp.setup.estimator, r.estimator.params,
                           "single-agent-estimator");
        run.put("single_agent_history.csv", history_csv(r.evolution.history));
        return evaluate_single_agent(exp, r.policy, r.estimator.params, mode, n, exp.evaluation_seed());
    }
    if (which == "uniform") {
        const auto est = run.load_checkpoint("estimator_initial.ckpt", "train-estimator", exp.setup.estimator);
        return uniform_power_reference(exp, est, n, exp.evaluation_seed());
    }
    throw CliError("usage", kUsage, "unknown baseline '" + which + "'");
}

void cmd_baseline(RunDir& run, const std::string& which)
{
    const EvaluationResult r = run_baseline(run, which, true);
    run.metric("baseline." + which, eval_metric(r));
    emit_rows(run, "baseline_" + which + ".csv", {make_row(run.exp(), which, r)});
}

void cmd_sweep(RunDir& run)
{
    const auto rows = run_sweep(run.exp().config, [](const ResultRow& r) {
        std::printf("[sweep] %s\n", results_csv_row(r).c_str());
        std::fflush(stdout);
    });
    run.put("sweep.csv", results_csv(rows));
    std::printf("wrote %zu rows to %s\n", rows.size(), (run.dir() / "sweep.csv").c_str());
}

void cmd_replay(RunDir& run)
{
    const auto arts = run.manifest().at("artifacts");
    for (auto it = arts.begin(); it != arts.end(); ++it)
        run.need(it.key(), "the producing stage");

    const json metrics = run.manifest().at("metrics");
    std::size_t checked = 0;
    auto compare = [&](const std::string& key, const EvaluationResult& r) {
        const double logged = metrics.at(key).at("rmse_m").get<double>();
        if (logged != r.rmse_m) {
            std::ostringstream msg;
            msg.precision(17);
            msg << key << ": logged RMSE " << logged << " but replay gives " << r.rmse_m;
            throw CliError("replay-mismatch", kIntegrity, msg.str());
        }
        std::printf("%s: RMSE %.6f m reproduced\n", key.c_str(), r.rmse_m);
        ++checked;
    };
    for (const char* mode : {"sample", "argmax"}) {
        const std::string key = std::string("eval.") + mode;
        if (metrics.contains(key))
            compare(key, run_eval(run, decode_option(mode, run.exp())));
    }
    for (const char* b : {"fingerprint", "supervised", "single-agent", "uniform"}) {
        const std::string key = std::string("baseline.") + b;
        if (metrics.contains(key))
            compare(key, run_baseline(run, b, false));
    }
    if (metrics.contains("stage1")) {
        const auto est = run.load_checkpoint("estimator_initial.ckpt", "train-estimator", run.exp().setup.estimator);
        const EvaluationResult r = uniform_power_reference(
            run.exp(), est, static_cast<std::size_t>(run.exp().config.plan.eval_episodes), run.exp().evaluation_seed());
        if (metrics.at("stage1").at("reference").at("rmse_m").get<double>() != r.rmse_m)
            throw CliError("replay-mismatch", kIntegrity, "stage1 reference RMSE does not replay");
        ++checked;
    }
    std::printf("replay ok: %zu artifacts verified, %zu metrics reproduced\n", arts.size(), checked);
}

} // namespace

int main(int argc, char** argv)
{
    if (const char* env = std::getenv("RISLOC_THREADS"); env && *env) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (*end != '\0' || n < 1)
            return report("usage", "RISLOC_THREADS must be a positive integer", kUsage);
        set_thread_count(static_cast<unsigned>(n));
    }

    CLI::App app{"risloc: RIS-assisted user localization with 1-bit uplink power control"};
    app.require_subcommand(1);
    GlobalOptions opt;
    std::uint64_t seed = 0;
    app.add_option("--config", opt.config_path, "JSON config file (empty or missing keys take preset values)");
    app.add_option("--preset", opt.preset, "Base preset")->check(CLI::IsMember({"paper", "desk"}));
    auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config)");
    app.add_option("--run-dir", opt.run_dir, "Run directory (default <output_dir>/run-<config hash>)");

    bool csv = false;
    std::string decode;
    std::string which;
    auto* gen = app.add_subcommand("gen-data", "Generate the random-sensing dataset for the initial estimator");
    gen->add_flag("--csv", csv, "Also write the dataset as CSV");
    app.add_subcommand("train-estimator", "Train the initial estimator on the generated dataset");
    app.add_subcommand("evolve", "Evolve the BS policy and UE power networks against the initial estimator");
    app.add_subcommand("retrain", "Collect episodes under the learned agents and retrain the estimator");
    auto* ev = app.add_subcommand("eval", "Evaluate the trained triple on held-out episodes");
    ev->add_option("--decode", decode, "RIS decoding at test time (default from config)")
        ->check(CLI::IsMember({"sample", "argmax"}));
    auto* bl = app.add_subcommand("baseline", "Run a comparison scheme");
    bl->add_option("which", which, "fingerprint | supervised | single-agent | uniform")
        ->required()
        ->check(CLI::IsMember({"fingerprint", "supervised", "single-agent", "uniform"}));
    app.add_subcommand("sweep", "Run every method over the configured sweep grid");
    app.add_subcommand("replay", "Verify artifact digests and reproduce every logged metric");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e);
        return report("usage", e.what(), kUsage);
    }
    if (*seed_opt)
        opt.seed = seed;

    try {
        RunDir run(opt);
        const std::string name = app.get_subcommands().front()->get_name();
        if (name == "gen-data")
            cmd_gen_data(run, csv);
        else if (name == "train-estimator")
            cmd_train_estimator(run);
        else if (name == "evolve")
            cmd_evolve(run);
        else if (name == "retrain")
            cmd_retrain(run);
        else if (name == "eval")
            cmd_eval(run, decode);
        else if (name == "baseline")
            cmd_baseline(run, which);
        else if (name == "sweep")
            cmd_sweep(run);
        else if (name == "replay")
            cmd_replay(run);
        return kOk;
    } catch (const CliError& e) {
        return report(e.kind, e.what(), e.code);
    } catch (const ConfigError& e) {
        return report("config", e.what(), kUsage, e.field());
    } catch (const nn::NumericalError& e) {
        return report("numerical", e.what(), kFailure);
    } catch (const std::exception& e) {
        return report("runtime", e.what(), kFailure);
    }
}
