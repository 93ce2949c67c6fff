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

#include "test_support.hpp"

#include "risloc/agents.hpp"
#include "risloc/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace risloc;

namespace {

AgentSetup desk_setup(int phase_count = 2, ObservationFormat format = ObservationFormat::Stacked)
{
    const UeRegion region{{20.0, 20.0, -20.0}, 15.0, 20.0};
    return AgentSetup::make(NetworkSizes::desk(), 16, phase_count, 5, format, 1e-9, 1.0, region);
}

} // namespace

TEST_CASE("observation encodings")
{
    const cplx y{3.0, -4.0};
    const auto s = observation_encode(y, ObservationFormat::Stacked);
    REQUIRE(s.size() == 2);
    CHECK(s(0) == 3.0);
    CHECK(s(1) == -4.0);
    const auto r = observation_encode(y, ObservationFormat::Rss);
    REQUIRE(r.size() == 1);
    CHECK(r(0) == 25.0);
    CHECK(observation_dim(ObservationFormat::Stacked) == 2);
    CHECK(observation_dim(ObservationFormat::Rss) == 1);

    const auto setup = desk_setup();
    const auto e = setup.encode(cplx{1e-4, 2e-4});
    CHECK(e(0) == doctest::Approx(1e-4 / std::sqrt(1e-9)));
    CHECK(e(1) == doctest::Approx(2e-4 / std::sqrt(1e-9)));
}

TEST_CASE("feedback bit is the sign of tanh, zero mapping to 1")
{
    CHECK(decode_bit(0.0).value() == 1);
    CHECK(decode_bit(0.3).value() == 1);
    CHECK(decode_bit(-1e-12).value() == 0);
    CHECK_THROWS_AS(FeedbackBit(2), std::invalid_argument);
    CHECK_THROWS_AS(decode_bit(std::nan("")), nn::NumericalError);
}

TEST_CASE("softmax groups sum to one and argmax ties pick the lowest index")
{
    Rng rng(1);
    nn::Vector logits(12);
    std::normal_distribution<double> n(0.0, 3.0);
    for (Eigen::Index i = 0; i < logits.size(); ++i)
        logits(i) = n(rng);
    const auto p = element_probabilities(logits, 4, 3);
    for (int e = 0; e < 4; ++e) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k)
            s += p[static_cast<std::size_t>(e * 3 + k)];
        CHECK(std::abs(s - 1.0) < 1e-12);
    }
    const auto flat = decode_profile(nn::Vector::Zero(12), 4, 3, DecodeMode::Argmax, rng);
    for (auto i : flat.indices())
        CHECK(i == 0);
    nn::Vector big = nn::Vector::Zero(4);
    big << 1000.0, -1000.0, -5.0, 7.0;
    const auto a = decode_profile(big, 2, 2, DecodeMode::Argmax, rng);
    CHECK(a[0] == 0);
    CHECK(a[1] == 1);
    const auto q = element_probabilities(big, 2, 2);
    CHECK(std::isfinite(q[0]));
    CHECK(q[0] == doctest::Approx(1.0));
}

TEST_CASE("sampled profiles follow the softmax")
{
    nn::Vector logits(3);
    logits << 0.0, std::log(2.0), std::log(5.0); // probabilities 1/8, 2/8, 5/8
    Rng rng(2);
    std::array<int, 3> counts{};
    const int n = 40000;
    for (int i = 0; i < n; ++i)
        ++counts[decode_profile(logits, 1, 3, DecodeMode::Sample, rng)[0]];
    CHECK(counts[0] / double(n) == doctest::Approx(0.125).epsilon(0.05));
    CHECK(counts[1] / double(n) == doctest::Approx(0.25).epsilon(0.05));
    CHECK(counts[2] / double(n) == doctest::Approx(0.625).epsilon(0.05));
}

TEST_CASE("architectures follow the configured sizes")
{
    const auto setup = desk_setup(4);
    CHECK(setup.policy.input_dim == 2);
    CHECK(setup.policy.heads.size() == 2);
    CHECK(setup.policy.head_output_dim(0) == 16 * 4);
    CHECK(setup.policy.head_output_dim(1) == 1);
    CHECK(setup.power.input_dim == 1);
    CHECK(setup.power.head_output_dim(0) == 1);
    CHECK(setup.estimator.head_output_dim(0) == 3);
    CHECK(setup.single_agent.heads.size() == 2);
    CHECK(setup.individual_size() == setup.policy.parameter_count() + setup.power.parameter_count());
    CHECK(setup.supervised.input_dim == 10);
    CHECK(desk_setup(2, ObservationFormat::Rss).supervised.input_dim == 5);
    CHECK(desk_setup(2, ObservationFormat::Rss).estimator.input_dim == 1);
}

TEST_CASE("power agent stays inside [0, P_max] and reads only the bit")
{
    const auto setup = desk_setup();
    Rng rng(3);
    for (int draw = 0; draw < 50; ++draw) {
        nn::ParamVector p = nn::initialize_params(setup.power, rng) * (1.0 + draw);
        PowerAgent a(setup.power, nn::as_span(p), 1.0);
        PowerAgent b(setup.power, nn::as_span(p), 1.0);
        for (int t = 0; t < 8; ++t) {
            const FeedbackBit bit(t % 3 == 0 ? 1 : 0);
            const double pa = a.step(bit);
            CHECK(pa >= 0.0);
            CHECK(pa <= 1.0);
            CHECK(pa == b.step(bit));
        }
    }
}

TEST_CASE("position scaler round-trips")
{
    const auto s = PositionScaler::for_region({{20.0, 20.0, -20.0}, 15.0, 20.0});
    const Position p{7.5, -3.0, -20.0};
    const auto v = s.normalize(p);
    const Position q = s.denormalize(v);
    CHECK(q.x == doctest::Approx(p.x));
    CHECK(q.y == doctest::Approx(p.y));
    CHECK(q.z == doctest::Approx(p.z));
    const auto c = s.normalize({20.0, 20.0, -20.0});
    CHECK(c.norm() == doctest::Approx(0.0));
}

TEST_CASE("agents reset to the same trajectory")
{
    const auto setup = desk_setup();
    Rng rng(4);
    const auto p = nn::initialize_params(setup.policy, rng);
    PolicyAgent agent(setup.policy, nn::as_span(p), 16, 2);
    const nn::Vector obs = setup.encode(cplx{3e-5, -1e-5});
    Rng r1(9);
    const auto first = agent.step(obs, DecodeMode::Sample, r1);
    agent.step(obs, DecodeMode::Sample, r1);
    agent.reset();
    Rng r2(9);
    const auto again = agent.step(obs, DecodeMode::Sample, r2);
    CHECK(first.profile == again.profile);
    CHECK(first.bit == again.bit);
}
