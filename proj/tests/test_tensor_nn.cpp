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
#include "risloc/tensor_nn.hpp"

#include <doctest.h>

#include <cmath>

using namespace risloc;
using testing::ScalarNet;

namespace {

nn::ArchitectureSpec small_spec()
{
    nn::ArchitectureSpec s;
    s.input_dim = 2;
    s.lstm_hidden = {3, 4};
    s.heads = {nn::mlp_head({5}, 3, nn::Activation::Tanh), nn::mlp_head({}, 2)};
    return s;
}

nn::SequenceBatch random_batch(int dim, int steps, int batch, Rng& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    nn::SequenceBatch in(static_cast<std::size_t>(steps), nn::Matrix(dim, batch));
    for (auto& m : in)
        for (Eigen::Index i = 0; i < m.size(); ++i)
            m.data()[i] = n(rng);
    return in;
}

std::vector<std::vector<double>> column(const nn::SequenceBatch& in, Eigen::Index j)
{
    std::vector<std::vector<double>> xs;
    for (const auto& m : in) {
        std::vector<double> x(static_cast<std::size_t>(m.rows()));
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            x[static_cast<std::size_t>(i)] = m(i, j);
        xs.push_back(x);
    }
    return xs;
}

} // namespace

TEST_CASE("parameter count follows the flat layout")
{
    const auto s = small_spec();
    CHECK(s.parameter_count() == testing::expected_parameter_count(s));
    const auto desk = estimator_architecture(NetworkSizes::desk(), ObservationFormat::Stacked);
    CHECK(desk.parameter_count() == testing::expected_parameter_count(desk));
    // 4*32*(2+32)+128 + 4*32*64+128 + (16*32+16) + (16*16+16) + (3*16+3)
    CHECK(desk.parameter_count() == 13651);
}

TEST_CASE("LSTM step matches the scalar-loop reference")
{
    const auto s = small_spec();
    Rng rng(1);
    const auto p = nn::initialize_params(s, rng);
    const auto in = random_batch(2, 6, 1, rng);
    const ScalarNet ref(s, p);
    const auto expect = ref.lstm(column(in, 0));

    const nn::NetworkView view(s, nn::as_span(p));
    auto st = nn::LSTMState::zeros(s);
    for (std::size_t t = 0; t < in.size(); ++t) {
        const nn::Vector h = view.lstm_step(st, in[t].col(0));
        for (int u = 0; u < 4; ++u)
            CHECK(h(u) == doctest::Approx(expect[t][static_cast<std::size_t>(u)]).epsilon(1e-12));
    }
}

TEST_CASE("pooled forward pass matches the scalar-loop reference for every head")
{
    const auto s = small_spec();
    Rng rng(2);
    const auto p = nn::initialize_params(s, rng);
    const auto in = random_batch(2, 4, 3, rng);
    const ScalarNet ref(s, p);
    for (std::size_t head = 0; head < 2; ++head) {
        const nn::Matrix out = nn::forward_pooled(s, nn::as_span(p), in, head);
        for (Eigen::Index j = 0; j < 3; ++j) {
            const auto e = ref.pooled(column(in, j), head);
            for (Eigen::Index o = 0; o < out.rows(); ++o)
                CHECK(out(o, j) == doctest::Approx(e[static_cast<std::size_t>(o)]).epsilon(1e-12));
        }
    }
}

TEST_CASE("feed-forward network without a trunk reads its input directly")
{
    const auto s = supervised_architecture(NetworkSizes::desk(), 5, ObservationFormat::Stacked);
    CHECK(s.input_dim == 10);
    CHECK(s.lstm_hidden.empty());
    Rng rng(3);
    const auto p = nn::initialize_params(s, rng);
    const auto in = random_batch(10, 1, 2, rng);
    const ScalarNet ref(s, p);
    const nn::Matrix out = nn::forward_pooled(s, nn::as_span(p), in);
    const nn::NetworkView view(s, nn::as_span(p));
    for (Eigen::Index j = 0; j < 2; ++j) {
        const auto e = ref.pooled(column(in, j));
        const nn::Vector ff = view.feed_forward(0, in[0].col(j));
        for (int o = 0; o < 3; ++o) {
            CHECK(out(o, j) == doctest::Approx(e[static_cast<std::size_t>(o)]).epsilon(1e-12));
            CHECK(ff(o) == doctest::Approx(e[static_cast<std::size_t>(o)]).epsilon(1e-12));
        }
    }
}

TEST_CASE("BPTT gradient matches central finite differences on every coordinate")
{
    const auto s = small_spec();
    Rng rng(4);
    for (int draw = 0; draw < 5; ++draw) {
        const auto p = nn::initialize_params(s, rng);
        const auto in = random_batch(2, 5, 2, rng);
        nn::Matrix tg = random_batch(3, 1, 2, rng)[0];
        const auto lg = nn::backward_bptt(s, nn::as_span(p), in, tg);
        CHECK(lg.loss == doctest::Approx(testing::batch_mse(s, p, in, tg)).epsilon(1e-14));
        double worst = 0.0;
        for (Eigen::Index k = 0; k < p.size(); ++k)
            worst = std::max(worst, testing::relative_error(lg.gradient(k), testing::finite_difference(s, p, in, tg, k)));
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("gradient of an unused head is zero")
{
    const auto s = small_spec();
    Rng rng(5);
    const auto p = nn::initialize_params(s, rng);
    const auto in = random_batch(2, 3, 1, rng);
    const nn::Matrix tg = nn::Matrix::Zero(3, 1);
    const auto lg = nn::backward_bptt(s, nn::as_span(p), in, tg, 0);
    const ScalarNet ref(s, p);
    const std::size_t off = ref.head_offset(1);
    for (std::size_t k = off; k < static_cast<std::size_t>(p.size()); ++k)
        CHECK(lg.gradient(static_cast<Eigen::Index>(k)) == 0.0);
}

TEST_CASE("flatten and unflatten are inverse")
{
    const auto s = small_spec();
    Rng rng(6);
    const auto p = nn::initialize_params(s, rng);
    const auto w = nn::unflatten(s, nn::as_span(p));
    CHECK(nn::flatten(s, w) == p);
    CHECK_THROWS(nn::unflatten(s, std::span<const double>(p.data(), static_cast<std::size_t>(p.size() - 1))));
}

TEST_CASE("initialization is bounded by 1/sqrt(fan_in)")
{
    nn::ArchitectureSpec s;
    s.input_dim = 3;
    s.lstm_hidden = {4};
    s.heads = {nn::mlp_head({}, 2)};
    Rng rng(7);
    const auto p = nn::initialize_params(s, rng);
    const double lstm_bound = 1.0 / std::sqrt(7.0);
    const Eigen::Index n_lstm = 4 * 4 * 7 + 16;
    CHECK(p.head(n_lstm).cwiseAbs().maxCoeff() <= lstm_bound);
    CHECK(p.tail(p.size() - n_lstm).cwiseAbs().maxCoeff() <= 0.5);
}

TEST_CASE("Adam first step moves each coordinate by about the learning rate")
{
    nn::ParamVector p = nn::ParamVector::Zero(3);
    nn::Gradient g(3);
    g << 2.0, -0.5, 0.0;
    nn::AdamOptimizer opt(3, {0.01, 0.9, 0.999, 1e-8});
    opt.step(p, g);
    // m_hat = g, v_hat = g^2  ->  step = lr * g / (|g| + eps)
    CHECK(p(0) == doctest::Approx(-0.01 * 2.0 / (2.0 + 1e-8)).epsilon(1e-12));
    CHECK(p(1) == doctest::Approx(0.01 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
    CHECK(p(2) == 0.0);
    CHECK(opt.steps_taken() == 1);
}

TEST_CASE("mse loss and non-finite detection")
{
    const std::vector<double> a{1.0, 2.0}, b{0.0, 4.0};
    CHECK(nn::mse_loss(a, b) == doctest::Approx(2.5));
    const auto s = small_spec();
    Rng rng(8);
    auto p = nn::initialize_params(s, rng);
    p(0) = std::numeric_limits<double>::quiet_NaN();
    const auto in = random_batch(2, 2, 1, rng);
    CHECK_THROWS_AS(nn::backward_bptt(s, nn::as_span(p), in, nn::Matrix::Zero(3, 1)), nn::NumericalError);
}

TEST_CASE("activation names round-trip")
{
    for (auto a : {nn::Activation::Identity, nn::Activation::Relu, nn::Activation::Tanh, nn::Activation::Sigmoid})
        CHECK(nn::activation_from_string(nn::to_string(a)) == a);
    CHECK_THROWS(nn::activation_from_string("gelu"));
}
