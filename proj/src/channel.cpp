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

#include "risloc/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace risloc {

namespace {

constexpr double kSpeedOfLight = 299792458.0;

cplx los_phase(double d, double wavelength)
{
    return std::polar(1.0, -2.0 * std::numbers::pi * d / wavelength);
}

// Standard circular complex Gaussian, E|w|^2 = 1.
cplx circular_gaussian(Rng& rng)
{
    std::normal_distribution<double> n(0.0, std::sqrt(0.5));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

struct RiceanWeights {
    double los;
    double scatter;
};

RiceanWeights ricean_weights(double kappa_db)
{
    if (std::isinf(kappa_db) && kappa_db > 0)
        return {1.0, 0.0};
    const double k = db_to_linear(kappa_db);
    return {std::sqrt(k / (k + 1.0)), std::sqrt(1.0 / (k + 1.0))};
}

} // namespace

bool Position::is_finite() const
{
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
}

double distance(const Position& a, const Position& b)
{
    return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

void ScenarioGeometry::validate() const
{
    if (!bs_position.is_finite() || !ris_origin.is_finite() || !ue_region.center.is_finite())
        throw std::invalid_argument("scenario positions must be finite");
    if (ris_rows < 1 || ris_cols < 1)
        throw std::invalid_argument("RIS must have at least one element");
    if (!(element_spacing > 0.0) || !std::isfinite(element_spacing))
        throw std::invalid_argument("element spacing must be positive");
    if (!(ue_region.x_half >= 0.0) || !(ue_region.y_half >= 0.0))
        throw std::invalid_argument("UE region half-widths must be non-negative");
}

double ChannelParams::wavelength() const { return kSpeedOfLight / carrier_frequency_hz; }

double ChannelParams::kappa_linear() const { return db_to_linear(ricean_kappa_db); }

double ChannelParams::noise_power_watt() const { return dbm_to_watt(noise_power_dbm); }

void ChannelParams::validate() const
{
    if (!(carrier_frequency_hz > 0.0) || !std::isfinite(carrier_frequency_hz))
        throw std::invalid_argument("carrier frequency must be positive");
    if (std::isnan(ricean_kappa_db))
        throw std::invalid_argument("Ricean factor must not be NaN");
    if (!std::isfinite(noise_power_dbm))
        throw std::invalid_argument("noise power must be finite");
    if (!std::isfinite(direct_extra_attenuation_db))
        throw std::invalid_argument("direct attenuation must be finite");
    if (!(max_power_watt > 0.0) || !std::isfinite(max_power_watt))
        throw std::invalid_argument("maximum power must be positive");
}

PhaseSet::PhaseSet(std::vector<double> values) : values_(std::move(values))
{
    if (values_.size() < 2)
        throw std::invalid_argument("phase set needs at least two levels");
    for (double v : values_)
        if (!(v >= 0.0 && v < 2.0))
            throw std::invalid_argument("phase levels must lie in [0, 2)");
    auto sorted = values_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("phase levels must be distinct");
}

RISProfile::RISProfile(std::vector<std::uint16_t> indices, std::size_t phase_count)
    : indices_(std::move(indices))
{
    for (std::size_t i = 0; i < indices_.size(); ++i)
        if (indices_[i] >= phase_count)
            throw std::out_of_range("RIS profile index " + std::to_string(indices_[i]) + " at element " +
                                    std::to_string(i) + " outside phase set of size " +
                                    std::to_string(phase_count));
}

bool ChannelRealization::is_finite() const
{
    auto ok = [](cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); };
    return ok(h_direct) && std::all_of(h_bs_ris.begin(), h_bs_ris.end(), ok) &&
           std::all_of(h_ris_ue.begin(), h_ris_ue.end(), ok);
}

double dbm_to_watt(double level_dbm) { return std::pow(10.0, (level_dbm - 30.0) / 10.0); }

double db_to_linear(double level_db) { return std::pow(10.0, level_db / 10.0); }

std::vector<Position> ris_element_positions(const ScenarioGeometry& geometry)
{
    std::vector<Position> out;
    out.reserve(static_cast<std::size_t>(geometry.n_ris()));
    for (int r = 0; r < geometry.ris_rows; ++r)
        for (int c = 0; c < geometry.ris_cols; ++c)
            out.push_back({geometry.ris_origin.x, geometry.ris_origin.y + c * geometry.element_spacing,
                           geometry.ris_origin.z - r * geometry.element_spacing});
    return out;
}

double free_space_gain(double d, double wavelength)
{
    if (!(d > 0.0))
        throw std::invalid_argument("free-space gain needs a positive distance");
    return wavelength / (4.0 * std::numbers::pi * d);
}

Position sample_ue_position(const ScenarioGeometry& geometry, Rng& rng)
{
    const auto& region = geometry.ue_region;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double ux = u(rng);
    const double uy = u(rng);
    return {region.center.x + ux * region.x_half, region.center.y + uy * region.y_half, region.center.z};
}

std::vector<cplx> phase_vector(const RISProfile& profile, const PhaseSet& phases)
{
    std::vector<cplx> phi(profile.size());
    for (std::size_t i = 0; i < profile.size(); ++i) {
        if (profile[i] >= phases.size())
            throw std::out_of_range("RIS profile index outside phase set");
        phi[i] = std::polar(1.0, std::numbers::pi * phases[profile[i]]);
    }
    return phi;
}

ChannelModel::ChannelModel(const ScenarioGeometry& geometry, const ChannelParams& params)
    : geometry_(geometry), params_(params), elements_(ris_element_positions(geometry))
{
    geometry_.validate();
    params_.validate();
    bs_ris_distance_.reserve(elements_.size());
    for (const auto& e : elements_)
        bs_ris_distance_.push_back(distance(geometry_.bs_position, e));
}

ChannelRealization ChannelModel::sample(const Position& ue, Rng& rng) const
{
    const double lambda = params_.wavelength();
    const auto w = ricean_weights(params_.ricean_kappa_db);
    const double direct_damping = std::pow(10.0, -params_.direct_extra_attenuation_db / 20.0);
    auto link = [&](double d, Rng& r) {
        cplx g = w.los * los_phase(d, lambda);
        if (w.scatter > 0.0)
            g += w.scatter * circular_gaussian(r);
        return free_space_gain(d, lambda) * g;
    };

    ChannelRealization out;
    out.h_direct = direct_damping * link(distance(ue, geometry_.bs_position), rng);
    const std::size_t n = elements_.size();
    out.h_bs_ris.resize(n);
    out.h_ris_ue.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.h_bs_ris[i] = link(bs_ris_distance_[i], rng);
    for (std::size_t i = 0; i < n; ++i)
        out.h_ris_ue[i] = link(distance(elements_[i], ue), rng);
    return out;
}

ChannelRealization ChannelModel::line_of_sight(const Position& ue) const
{
    ChannelParams p = params_;
    p.ricean_kappa_db = std::numeric_limits<double>::infinity();
    Rng unused(0);
    return ChannelModel(geometry_, p).sample(ue, unused);
}

ChannelRealization sample_channel(const ScenarioGeometry& geometry, const ChannelParams& params,
                                  const Position& ue, Rng& rng)
{
    return ChannelModel(geometry, params).sample(ue, rng);
}

cplx noiseless_observation(const ChannelRealization& realization, std::span<const cplx> phi,
                           double power_watt, const ChannelParams& params)
{
    if (!(power_watt >= 0.0 && power_watt <= params.max_power_watt))
        throw std::out_of_range("transmit power " + std::to_string(power_watt) + " W outside [0, P_max]");
    if (phi.size() != realization.h_bs_ris.size() || phi.size() != realization.h_ris_ue.size())
        throw std::invalid_argument("phase vector length does not match channel");
    cplx cascade{};
    for (std::size_t i = 0; i < phi.size(); ++i)
        cascade += realization.h_bs_ris[i] * phi[i] * realization.h_ris_ue[i];
    const double amplitude = params.power_scaling == PowerScaling::Sqrt ? std::sqrt(power_watt) : power_watt;
    return amplitude * (realization.h_direct + cascade);
}

cplx synthesize_observation(const ChannelRealization& realization, const RISProfile& profile,
                            const PhaseSet& phases, double power_watt, const ChannelParams& params,
                            Rng& rng)
{
    const auto phi = phase_vector(profile, phases);
    cplx y = noiseless_observation(realization, phi, power_watt, params);
    if (params.noise_enabled)
        y += std::sqrt(params.noise_power_watt()) * circular_gaussian(rng);
    return y;
}

} // namespace risloc
