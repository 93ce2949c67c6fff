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

#include "risloc/rng.hpp"

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace risloc {

using cplx = std::complex<double>;

struct Position {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    bool is_finite() const;
    friend bool operator==(const Position&, const Position&) = default;
};

double distance(const Position& a, const Position& b);

/// Axis-aligned UE region: x_center +/- x_half, y_center +/- y_half, z fixed.
struct UeRegion {
    Position center;
    double x_half = 0.0;
    double y_half = 0.0;
};

struct ScenarioGeometry {
    Position bs_position;
    Position ris_origin; // top-left element
    int ris_rows = 1;
    int ris_cols = 1;
    double element_spacing = 0.0; // meters
    UeRegion ue_region;

    int n_ris() const { return ris_rows * ris_cols; }
    void validate() const;
};

enum class PowerScaling { Sqrt, Literal };

struct ChannelParams {
    double carrier_frequency_hz = 3.5e9;
    double ricean_kappa_db = 10.0; // +inf gives a deterministic LoS channel
    double direct_extra_attenuation_db = 10.0;
    double noise_power_dbm = -60.0;
    bool noise_enabled = true;
    double max_power_watt = 1.0;
    PowerScaling power_scaling = PowerScaling::Sqrt;

    double wavelength() const;
    double kappa_linear() const;
    double noise_power_watt() const;
    void validate() const;
};

/// Ordered discrete phase levels; element response is exp(j*pi*theta).
class PhaseSet {
public:
    explicit PhaseSet(std::vector<double> values);
    static PhaseSet binary() { return PhaseSet({0.0, 1.0}); }

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> values_;
};

/// Per-element indices into a PhaseSet. Construction rejects any index
/// outside [0, |Theta|), so every held profile is admissible.
class RISProfile {
public:
    RISProfile() = default;
    RISProfile(std::vector<std::uint16_t> indices, std::size_t phase_count);

    static RISProfile zeros(int n_ris) { return RISProfile(std::vector<std::uint16_t>(n_ris, 0), 1); }

    std::size_t size() const { return indices_.size(); }
    std::uint16_t operator[](std::size_t i) const { return indices_[i]; }
    const std::vector<std::uint16_t>& indices() const { return indices_; }
    friend bool operator==(const RISProfile&, const RISProfile&) = default;

private:
    std::vector<std::uint16_t> indices_;
};

struct ChannelRealization {
    cplx h_direct{};
    std::vector<cplx> h_bs_ris;
    std::vector<cplx> h_ris_ue;

    bool is_finite() const;
};

double dbm_to_watt(double level_dbm);
double db_to_linear(double level_db);

/// N_ris positions in the x = 0 plane, row-major: rows descend in z and
/// columns increase in y from ris_origin.
std::vector<Position> ris_element_positions(const ScenarioGeometry& geometry);

/// Friis amplitude gain lambda / (4 pi d). Throws for d <= 0.
double free_space_gain(double d, double wavelength);

Position sample_ue_position(const ScenarioGeometry& geometry, Rng& rng);

std::vector<cplx> phase_vector(const RISProfile& profile, const PhaseSet& phases);

/// Channel synthesis for one geometry. Element positions and the static
/// BS-RIS LoS terms are cached; sampling is pure given the RNG.
class ChannelModel {
public:
    ChannelModel(const ScenarioGeometry& geometry, const ChannelParams& params);

    ChannelRealization sample(const Position& ue, Rng& rng) const;
    /// Deterministic LoS-only realization (the kappa -> infinity limit).
    ChannelRealization line_of_sight(const Position& ue) const;

    const ScenarioGeometry& geometry() const { return geometry_; }
    const ChannelParams& params() const { return params_; }
    const std::vector<Position>& elements() const { return elements_; }

private:
    ScenarioGeometry geometry_;
    ChannelParams params_;
    std::vector<Position> elements_;
    std::vector<double> bs_ris_distance_;
};

ChannelRealization sample_channel(const ScenarioGeometry& geometry, const ChannelParams& params,
                                  const Position& ue, Rng& rng);

/// Noiseless part of the received signal, a(P) * (h_d + sum_i h_bs_ris[i] phi_i h_ris_ue[i]).
cplx noiseless_observation(const ChannelRealization& realization, std::span<const cplx> phi,
                           double power_watt, const ChannelParams& params);

/// Received baseband sample for one frame with unit pilot x(t) = 1.
/// Throws std::out_of_range when power is outside [0, P_max].
cplx synthesize_observation(const ChannelRealization& realization, const RISProfile& profile,
                            const PhaseSet& phases, double power_watt, const ChannelParams& params,
                            Rng& rng);

} // namespace risloc
