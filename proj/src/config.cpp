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

#include "risloc/config.hpp"

#include "risloc/checkpoint.hpp"
#include "risloc/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace risloc {

using nlohmann::json;

namespace {

// Walks a JSON object, remembering the dotted path and which keys were used
// so that unknown keys are reported instead of silently ignored.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path))
    {
        if (!node_.is_object())
            throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    ~Section() noexcept(false)
    {
        if (std::uncaught_exceptions() > 0)
            return;
        for (auto it = node_.begin(); it != node_.end(); ++it)
            if (!used_.count(it.key()))
                throw ConfigError(field(it.key()), "unknown key");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* find(const std::string& key)
    {
        used_.insert(key);
        auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    template <class T>
    void get(const std::string& key, T& out)
    {
        if (const json* v = find(key)) {
            try {
                out = v->get<T>();
            } catch (const json::exception&) {
                throw ConfigError(field(key), "has the wrong type");
            }
        }
    }

    void get_real(const std::string& key, double& out)
    {
        if (const json* v = find(key)) {
            if (v->is_string()) {
                const auto s = v->get<std::string>();
                if (s == "inf")
                    out = std::numeric_limits<double>::infinity();
                else if (s == "-inf")
                    out = -std::numeric_limits<double>::infinity();
                else
                    throw ConfigError(field(key), "expected a number");
            } else if (v->is_number()) {
                out = v->get<double>();
            } else {
                throw ConfigError(field(key), "expected a number");
            }
        }
    }

    void get_optional_real(const std::string& key, std::optional<double>& out)
    {
        if (const json* v = find(key)) {
            if (v->is_null()) {
                out.reset();
                return;
            }
            double x = 0.0;
            get_real(key, x);
            out = x;
        }
    }

    void get_position(const std::string& key, Position& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_array() || v->size() != 3 || !std::all_of(v->begin(), v->end(), [](const json& e) { return e.is_number(); }))
                throw ConfigError(field(key), "expected [x, y, z]");
            out = {(*v)[0].get<double>(), (*v)[1].get<double>(), (*v)[2].get<double>()};
        }
    }

    template <class Fn>
    void section(const std::string& key, Fn&& fn)
    {
        if (const json* v = find(key)) {
            Section sub(*v, field(key));
            fn(sub);
        }
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> used_;
};

ObservationFormat parse_format(const std::string& s, const std::string& field)
{
    if (s == "stacked")
        return ObservationFormat::Stacked;
    if (s == "rss")
        return ObservationFormat::Rss;
    throw ConfigError(field, "must be \"stacked\" or \"rss\"");
}

DecodeMode parse_decode(const std::string& s, const std::string& field)
{
    if (s == "sample")
        return DecodeMode::Sample;
    if (s == "argmax")
        return DecodeMode::Argmax;
    throw ConfigError(field, "must be \"sample\" or \"argmax\"");
}

json real_json(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return v;
}

json position_json(const Position& p) { return json::array({p.x, p.y, p.z}); }

int exact_sqrt(int n)
{
    const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    return r * r == n ? r : -1;
}

} // namespace

const std::vector<std::string>& known_methods()
{
    static const std::vector<std::string> m{"ma-sample", "ma-argmax", "single-agent", "supervised", "fingerprint",
                                            "uniform"};
    return m;
}

ExperimentConfig preset_config(const std::string& name)
{
    ExperimentConfig c;
    c.preset = name;
    c.geometry.bs_position = {40.0, -40.0, 10.0};
    c.geometry.ris_origin = {0.0, 0.0, 0.0};
    c.geometry.ue_region = {{20.0, 20.0, -20.0}, 15.0, 20.0};
    c.channel = ChannelParams{};
    c.max_power_dbm = 30.0;
    c.rollout.horizon = 10;
    c.rollout.format = ObservationFormat::Stacked;
    c.rollout.decode = DecodeMode::Sample;
    c.plan.sweep_noise_dbm = {-60.0};
    c.plan.sweep_formats = {ObservationFormat::Stacked};
    c.plan.sweep_methods = known_methods();
    if (name == "paper") {
        c.geometry.ris_rows = c.geometry.ris_cols = 20;
        c.sizes = NetworkSizes::paper();
        c.plan.ne = {50, 100, 0.5, 0.5, 64, 0.0, 2, 0.0};
        c.plan.sweep_n_ris = {225, 400, 625, 900, 1225, 1600};
    } else if (name == "desk") {
        c.geometry.ris_rows = c.geometry.ris_cols = 4;
        c.sizes = NetworkSizes::desk();
        c.rollout.horizon = 5;
        c.plan.ne = {20, 50, 0.5, 0.5, 32, 0.0, 2, 0.0};
        // 20 log10(400 / 16) dB below the reference noise keeps the RIS-path
        // SNR of the 400-element array.
        c.channel.noise_power_dbm = -88.0;
        c.plan.stage1_size = c.plan.stage3_size = c.plan.supervised_size = 5000;
        c.plan.sweep_n_ris = {16};
        c.plan.sweep_noise_dbm = {-88.0};
    } else {
        throw ConfigError("preset", "unknown preset '" + name + "' (expected paper or desk)");
    }
    c.resolve();
    return c;
}

void ExperimentConfig::resolve()
{
    channel.max_power_watt = dbm_to_watt(max_power_dbm);
    geometry.element_spacing = element_spacing_m ? *element_spacing_m : channel.wavelength() / 2.0;
    rollout.initial_power_watt = initial_power_dbm ? dbm_to_watt(*initial_power_dbm) : channel.max_power_watt;
    plan.ne.power_budget =
        power_budget_w ? *power_budget_w : 0.5 * static_cast<double>(rollout.horizon) * channel.max_power_watt;
}

Scenario ExperimentConfig::scenario() const { return Scenario(geometry, channel, PhaseSet(phase_values)); }

AgentSetup ExperimentConfig::agent_setup() const
{
    return AgentSetup::make(sizes, geometry.n_ris(), static_cast<int>(phase_values.size()), rollout.horizon,
                            rollout.format, channel.noise_power_watt(), channel.max_power_watt, geometry.ue_region);
}

ExperimentConfig ExperimentConfig::with_point(int n_ris, double noise_dbm, ObservationFormat format) const
{
    ExperimentConfig c = *this;
    const int side = exact_sqrt(n_ris);
    if (side < 1)
        throw ConfigError("scenario.n_ris", "must be a perfect square (square RIS)");
    c.geometry.ris_rows = c.geometry.ris_cols = side;
    c.channel.noise_power_dbm = noise_dbm;
    c.rollout.format = format;
    c.rollout.initial_profile.reset();
    c.resolve();
    validate_config(c);
    return c;
}

std::string ExperimentConfig::canonical_json() const
{
    json j;
    j["preset"] = preset;
    j["seed"] = seed;
    j["scenario"] = {{"bs_position", position_json(geometry.bs_position)},
                     {"ris_origin", position_json(geometry.ris_origin)},
                     {"n_ris", geometry.n_ris()},
                     {"element_spacing_m", element_spacing_m ? json(*element_spacing_m) : json(nullptr)},
                     {"ue_center", position_json(geometry.ue_region.center)},
                     {"ue_half_widths", json::array({geometry.ue_region.x_half, geometry.ue_region.y_half})}};
    j["channel"] = {{"carrier_frequency_hz", channel.carrier_frequency_hz},
                    {"ricean_kappa_db", real_json(channel.ricean_kappa_db)},
                    {"direct_extra_attenuation_db", channel.direct_extra_attenuation_db},
                    {"noise_power_dbm", channel.noise_power_dbm},
                    {"noise_enabled", channel.noise_enabled},
                    {"max_power_dbm", max_power_dbm},
                    {"power_scaling", channel.power_scaling == PowerScaling::Sqrt ? "sqrt" : "literal"}};
    j["phases"] = phase_values;
    j["rollout"] = {{"horizon", rollout.horizon},
                    {"initial_power_dbm", initial_power_dbm ? json(*initial_power_dbm) : json(nullptr)},
                    {"observation_format", to_string(rollout.format)},
                    {"train_decode", to_string(rollout.decode)},
                    {"eval_decode", to_string(plan.eval_decode)},
                    {"episode_static_channel", rollout.episode_static_channel}};
    if (rollout.initial_profile)
        j["rollout"]["initial_profile"] = rollout.initial_profile->indices();
    j["networks"] = {{"lstm_hidden", sizes.lstm_hidden},
                     {"policy_ris_hidden", sizes.policy_ris_hidden},
                     {"policy_bit_hidden", sizes.policy_bit_hidden},
                     {"power_hidden", sizes.power_hidden},
                     {"estimator_hidden", sizes.estimator_hidden},
                     {"supervised_hidden", sizes.supervised_hidden}};
    const auto& ne = plan.ne;
    j["ne"] = {{"population_size", ne.population_size},
               {"generations", ne.generations},
               {"p_mut", ne.p_mut},
               {"sigma_mut", ne.sigma_mut},
               {"episodes_per_eval", ne.episodes_per_eval},
               {"power_budget_w", power_budget_w ? json(*power_budget_w) : json(nullptr)},
               {"elite_count", ne.elite_count},
               {"infeasible_offset", ne.infeasible_offset},
               {"checkpoint_every", plan.checkpoint_every}};
    j["training"] = {{"stage1_size", plan.stage1_size},
                     {"stage3_size", plan.stage3_size},
                     {"supervised_size", plan.supervised_size},
                     {"epochs", plan.supervised.epochs},
                     {"batch_size", plan.supervised.batch_size},
                     {"learning_rate", plan.supervised.learning_rate},
                     {"validation_fraction", plan.supervised.validation_fraction},
                     {"eval_episodes", plan.eval_episodes},
                     {"warm_start", plan.warm_start}};
    j["fingerprint"] = {{"samples_per_block", fingerprint.samples_per_block},
                        {"k", fingerprint.k},
                        {"aggregation", fingerprint.average_samples ? "average" : "separate"},
                        {"db_power", fingerprint.db_uniform_power ? "uniform" : "max"},
                        {"query_power", fingerprint.query_uniform_power ? "uniform" : "max"}};
    std::vector<std::string> formats;
    for (auto f : plan.sweep_formats)
        formats.push_back(to_string(f));
    j["sweep"] = {{"n_ris", plan.sweep_n_ris},
                  {"noise_dbm", plan.sweep_noise_dbm},
                  {"formats", formats},
                  {"methods", plan.sweep_methods}};
    return j.dump(2);
}

std::string ExperimentConfig::hash() const
{
    const std::string text = canonical_json();
    return hex64(fnv1a64(text.data(), text.size()));
}

void validate_config(const ExperimentConfig& c)
{
    auto check = [](bool ok, const char* field, const char* msg) {
        if (!ok)
            throw ConfigError(field, msg);
    };
    try {
        c.geometry.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("scenario", e.what());
    }
    check(c.geometry.ris_rows == c.geometry.ris_cols, "scenario.n_ris", "must be a perfect square (square RIS)");
    check(c.channel.carrier_frequency_hz > 0.0 && std::isfinite(c.channel.carrier_frequency_hz),
          "channel.carrier_frequency_hz", "must be positive");
    check(!std::isnan(c.channel.ricean_kappa_db), "channel.ricean_kappa_db", "must be a number or \"inf\"");
    check(std::isfinite(c.channel.noise_power_dbm), "channel.noise_power_dbm", "must be finite");
    check(std::isfinite(c.channel.direct_extra_attenuation_db), "channel.direct_extra_attenuation_db",
          "must be finite");
    check(std::isfinite(c.max_power_dbm), "channel.max_power_dbm", "must be finite");
    try {
        PhaseSet check_phases(c.phase_values);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("phases", e.what());
    }
    check(c.phase_values.size() <= 65535, "phases", "too many phase levels");
    check(c.rollout.horizon >= 1, "rollout.horizon", "must be >= 1");
    check(c.rollout.initial_power_watt >= 0.0 && c.rollout.initial_power_watt <= c.channel.max_power_watt,
          "rollout.initial_power_dbm", "must not exceed max_power_dbm");
    if (c.rollout.initial_profile) {
        check(c.rollout.initial_profile->size() == static_cast<std::size_t>(c.geometry.n_ris()),
              "rollout.initial_profile", "length must equal n_ris");
        for (auto i : c.rollout.initial_profile->indices())
            check(i < c.phase_values.size(), "rollout.initial_profile", "index outside the phase set");
    }
    auto check_sizes = [&](const std::vector<int>& v, const char* field, bool allow_empty) {
        check(allow_empty || !v.empty(), field, "must not be empty");
        for (int u : v)
            check(u >= 1, field, "layer sizes must be >= 1");
    };
    check_sizes(c.sizes.lstm_hidden, "networks.lstm_hidden", false);
    check_sizes(c.sizes.policy_ris_hidden, "networks.policy_ris_hidden", true);
    check_sizes(c.sizes.policy_bit_hidden, "networks.policy_bit_hidden", true);
    check_sizes(c.sizes.power_hidden, "networks.power_hidden", true);
    check_sizes(c.sizes.estimator_hidden, "networks.estimator_hidden", true);
    check_sizes(c.sizes.supervised_hidden, "networks.supervised_hidden", true);

    const auto& ne = c.plan.ne;
    check(ne.population_size >= 8, "ne.population_size", "must be >= 8 so that floor(L/4) >= 2");
    check(ne.generations >= 0, "ne.generations", "must be >= 0");
    check(ne.p_mut >= 0.0 && ne.p_mut <= 1.0, "ne.p_mut", "must lie in [0, 1]");
    check(ne.sigma_mut >= 0.0 && std::isfinite(ne.sigma_mut), "ne.sigma_mut", "must be >= 0");
    check(ne.episodes_per_eval >= 1, "ne.episodes_per_eval", "must be >= 1");
    check(ne.power_budget >= 0.0 && std::isfinite(ne.power_budget), "ne.power_budget_w", "must be >= 0");
    check(ne.elite_count >= 0 && ne.elite_count < ne.population_size, "ne.elite_count", "must lie in [0, L_pop)");
    check(ne.infeasible_offset >= 0.0 && std::isfinite(ne.infeasible_offset), "ne.infeasible_offset",
          "must be >= 0");
    check(c.plan.checkpoint_every >= 1, "ne.checkpoint_every", "must be >= 1");

    const auto& s = c.plan.supervised;
    check(s.epochs >= 1, "training.epochs", "must be >= 1");
    check(s.batch_size >= 1, "training.batch_size", "must be >= 1");
    check(s.learning_rate > 0.0, "training.learning_rate", "must be positive");
    check(s.validation_fraction >= 0.0 && s.validation_fraction < 1.0, "training.validation_fraction",
          "must lie in [0, 1)");
    check(c.plan.stage1_size >= s.batch_size, "training.stage1_size", "must be >= batch_size");
    check(c.plan.stage3_size >= s.batch_size, "training.stage3_size", "must be >= batch_size");
    check(c.plan.supervised_size >= s.batch_size, "training.supervised_size", "must be >= batch_size");
    check(c.plan.eval_episodes >= 1, "training.eval_episodes", "must be >= 1");

    check(c.fingerprint.samples_per_block >= 1, "fingerprint.samples_per_block", "must be >= 1");
    check(c.fingerprint.k >= 1, "fingerprint.k", "must be >= 1");

    for (int n : c.plan.sweep_n_ris)
        check(exact_sqrt(n) >= 1, "sweep.n_ris", "every value must be a perfect square");
    for (double v : c.plan.sweep_noise_dbm)
        check(std::isfinite(v), "sweep.noise_dbm", "values must be finite");
    for (const auto& m : c.plan.sweep_methods)
        check(std::find(known_methods().begin(), known_methods().end(), m) != known_methods().end(), "sweep.methods",
              "unknown method");
}

ExperimentConfig parse_config_text(const std::string& text, const std::optional<std::string>& preset)
{
    json root = json::object();
    if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
        try {
            root = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
        }
    }
    std::string preset_name = preset.value_or("paper");
    if (!preset && root.is_object() && root.contains("preset")) {
        if (!root["preset"].is_string())
            throw ConfigError("preset", "must be a string");
        preset_name = root["preset"].get<std::string>();
    }
    ExperimentConfig c = preset_config(preset_name);

    {
        Section r(root, "");
        r.find("preset");
        r.get("seed", c.seed);
        r.get("output_dir", c.output_dir);
        r.section("scenario", [&](Section& s) {
            s.get_position("bs_position", c.geometry.bs_position);
            s.get_position("ris_origin", c.geometry.ris_origin);
            int n_ris = c.geometry.n_ris();
            s.get("n_ris", n_ris);
            const int side = n_ris >= 1 ? exact_sqrt(n_ris) : -1;
            if (side < 1)
                throw ConfigError(s.field("n_ris"), "must be a positive perfect square (square RIS)");
            c.geometry.ris_rows = c.geometry.ris_cols = side;
            s.get_optional_real("element_spacing_m", c.element_spacing_m);
            s.get_position("ue_center", c.geometry.ue_region.center);
            if (const json* v = s.find("ue_half_widths")) {
                if (!v->is_array() || v->size() != 2)
                    throw ConfigError(s.field("ue_half_widths"), "expected [x_half, y_half]");
                c.geometry.ue_region.x_half = (*v)[0].get<double>();
                c.geometry.ue_region.y_half = (*v)[1].get<double>();
            }
        });
        r.section("channel", [&](Section& s) {
            s.get_real("carrier_frequency_hz", c.channel.carrier_frequency_hz);
            s.get_real("ricean_kappa_db", c.channel.ricean_kappa_db);
            s.get_real("direct_extra_attenuation_db", c.channel.direct_extra_attenuation_db);
            s.get_real("noise_power_dbm", c.channel.noise_power_dbm);
            s.get("noise_enabled", c.channel.noise_enabled);
            s.get_real("max_power_dbm", c.max_power_dbm);
            std::string scaling = c.channel.power_scaling == PowerScaling::Sqrt ? "sqrt" : "literal";
            s.get("power_scaling", scaling);
            if (scaling == "sqrt")
                c.channel.power_scaling = PowerScaling::Sqrt;
            else if (scaling == "literal")
                c.channel.power_scaling = PowerScaling::Literal;
            else
                throw ConfigError(s.field("power_scaling"), "must be \"sqrt\" or \"literal\"");
        });
        r.get("phases", c.phase_values);
        r.section("rollout", [&](Section& s) {
            s.get("horizon", c.rollout.horizon);
            s.get_optional_real("initial_power_dbm", c.initial_power_dbm);
            std::string v = to_string(c.rollout.format);
            s.get("observation_format", v);
            c.rollout.format = parse_format(v, s.field("observation_format"));
            v = to_string(c.rollout.decode);
            s.get("train_decode", v);
            c.rollout.decode = parse_decode(v, s.field("train_decode"));
            v = to_string(c.plan.eval_decode);
            s.get("eval_decode", v);
            c.plan.eval_decode = parse_decode(v, s.field("eval_decode"));
            s.get("episode_static_channel", c.rollout.episode_static_channel);
            if (const json* p = s.find("initial_profile"); p && !p->is_null()) {
                std::vector<int> idx;
                try {
                    idx = p->get<std::vector<int>>();
                } catch (const json::exception&) {
                    throw ConfigError(s.field("initial_profile"), "expected a list of phase indices");
                }
                std::vector<std::uint16_t> u;
                for (int i : idx) {
                    if (i < 0 || i > 65535)
                        throw ConfigError(s.field("initial_profile"), "index out of range");
                    u.push_back(static_cast<std::uint16_t>(i));
                }
                c.rollout.initial_profile = RISProfile(std::move(u), 65536);
            }
        });
        r.section("networks", [&](Section& s) {
            s.get("lstm_hidden", c.sizes.lstm_hidden);
            s.get("policy_ris_hidden", c.sizes.policy_ris_hidden);
            s.get("policy_bit_hidden", c.sizes.policy_bit_hidden);
            s.get("power_hidden", c.sizes.power_hidden);
            s.get("estimator_hidden", c.sizes.estimator_hidden);
            s.get("supervised_hidden", c.sizes.supervised_hidden);
        });
        r.section("ne", [&](Section& s) {
            s.get("population_size", c.plan.ne.population_size);
            s.get("generations", c.plan.ne.generations);
            s.get_real("p_mut", c.plan.ne.p_mut);
            s.get_real("sigma_mut", c.plan.ne.sigma_mut);
            s.get("episodes_per_eval", c.plan.ne.episodes_per_eval);
            s.get_optional_real("power_budget_w", c.power_budget_w);
            s.get("elite_count", c.plan.ne.elite_count);
            s.get_real("infeasible_offset", c.plan.ne.infeasible_offset);
            s.get("checkpoint_every", c.plan.checkpoint_every);
        });
        r.section("training", [&](Section& s) {
            s.get("stage1_size", c.plan.stage1_size);
            s.get("stage3_size", c.plan.stage3_size);
            s.get("supervised_size", c.plan.supervised_size);
            s.get("epochs", c.plan.supervised.epochs);
            s.get("batch_size", c.plan.supervised.batch_size);
            s.get_real("learning_rate", c.plan.supervised.learning_rate);
            s.get_real("validation_fraction", c.plan.supervised.validation_fraction);
            s.get("eval_episodes", c.plan.eval_episodes);
            s.get("warm_start", c.plan.warm_start);
        });
        r.section("fingerprint", [&](Section& s) {
            s.get("samples_per_block", c.fingerprint.samples_per_block);
            s.get("k", c.fingerprint.k);
            auto choice = [&](const char* key, bool& flag, const char* yes, const char* no) {
                std::string v = flag ? yes : no;
                s.get(key, v);
                if (v != yes && v != no)
                    throw ConfigError(s.field(key), std::string("must be \"") + yes + "\" or \"" + no + "\"");
                flag = v == yes;
            };
            choice("aggregation", c.fingerprint.average_samples, "average", "separate");
            choice("db_power", c.fingerprint.db_uniform_power, "uniform", "max");
            choice("query_power", c.fingerprint.query_uniform_power, "uniform", "max");
        });
        r.section("sweep", [&](Section& s) {
            s.get("n_ris", c.plan.sweep_n_ris);
            s.get("noise_dbm", c.plan.sweep_noise_dbm);
            if (const json* f = s.find("formats")) {
                if (!f->is_array())
                    throw ConfigError(s.field("formats"), "expected a list");
                c.plan.sweep_formats.clear();
                for (const auto& e : *f)
                    c.plan.sweep_formats.push_back(parse_format(e.is_string() ? e.get<std::string>() : "",
                                                                s.field("formats")));
            }
            s.get("methods", c.plan.sweep_methods);
        });
    }
    c.resolve();
    validate_config(c);
    return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path, const std::optional<std::string>& preset)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("<file>", "cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), preset);
}

} // namespace risloc
