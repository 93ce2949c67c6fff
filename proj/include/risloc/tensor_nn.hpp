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

// Minimal network kernel for the three fixed topologies used here: a stack
// of LSTM layers (optional) feeding one or more dense heads. Parameters live
// in one flat vector so that neuroevolution can treat a network as a point
// in R^n, while supervised training gets exact BPTT gradients.
//
// Flat layout, in order:
//   for each LSTM layer l (input size I_l, hidden size H_l):
//     W_l : 4H_l x (I_l + H_l), row-major, gate row blocks [i, f, g, o],
//           columns [input | recurrent]
//     b_l : 4H_l
//   for each head, for each dense layer (input I, units U):
//     W   : U x I, row-major
//     b   : U
// Heads read the top LSTM output (or the raw input when there is no LSTM).

#include "risloc/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace risloc::nn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ParamVector = Eigen::VectorXd;
using Gradient = Eigen::VectorXd;

inline std::span<const double> as_span(const Eigen::VectorXd& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Activation { Identity, Relu, Tanh, Sigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct DenseLayerSpec {
    int units = 1;
    Activation activation = Activation::Identity;
    friend bool operator==(const DenseLayerSpec&, const DenseLayerSpec&) = default;
};

struct HeadSpec {
    std::vector<DenseLayerSpec> layers;
    friend bool operator==(const HeadSpec&, const HeadSpec&) = default;
};

/// Hidden layers with `activation`, then a linear output layer of `outputs`.
HeadSpec mlp_head(const std::vector<int>& hidden, int outputs, Activation activation = Activation::Relu);

struct ArchitectureSpec {
    int input_dim = 1;
    std::vector<int> lstm_hidden;
    std::vector<HeadSpec> heads;

    int trunk_dim() const { return lstm_hidden.empty() ? input_dim : lstm_hidden.back(); }
    int head_output_dim(std::size_t head) const { return heads.at(head).layers.back().units; }
    std::size_t parameter_count() const;
    void validate() const;
    friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

struct LstmLayerWeights {
    RowMatrix w;
    Vector b;
};

struct DenseWeights {
    RowMatrix w;
    Vector b;
};

/// Structured (owning) view of a parameter vector.
struct NetworkWeights {
    std::vector<LstmLayerWeights> lstm;
    std::vector<std::vector<DenseWeights>> heads;
};

NetworkWeights unflatten(const ArchitectureSpec& spec, std::span<const double> params);
ParamVector flatten(const ArchitectureSpec& spec, const NetworkWeights& weights);

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for every weight and bias.
ParamVector initialize_params(const ArchitectureSpec& spec, Rng& rng);

struct LSTMState {
    std::vector<Vector> h;
    std::vector<Vector> c;

    static LSTMState zeros(const ArchitectureSpec& spec);
};

/// Non-owning, read-only binding of an architecture to a parameter span.
class NetworkView {
public:
    NetworkView(const ArchitectureSpec& spec, std::span<const double> params);

    const ArchitectureSpec& spec() const { return *spec_; }

    /// One recurrent step through every LSTM layer; updates `state` and
    /// returns the top-layer hidden vector.
    Vector lstm_step(LSTMState& state, const Vector& input) const;

    Vector feed_forward(std::size_t head, const Vector& input) const;

    Eigen::Map<const RowMatrix> lstm_w(std::size_t layer) const;
    Eigen::Map<const Vector> lstm_b(std::size_t layer) const;
    Eigen::Map<const RowMatrix> dense_w(std::size_t head, std::size_t layer) const;
    Eigen::Map<const Vector> dense_b(std::size_t head, std::size_t layer) const;

private:
    const ArchitectureSpec* spec_;
    std::span<const double> params_;
    std::vector<std::size_t> lstm_offsets_;
    std::vector<std::vector<std::size_t>> head_offsets_;
};

double mse_loss(std::span<const double> pred, std::span<const double> target);

/// Batched sequences: steps[t] is input_dim x batch. Networks without an
/// LSTM trunk take exactly one step.
using SequenceBatch = std::vector<Matrix>;

/// Forward pass with temporal mean pooling of the top LSTM output, then
/// `head`. Returns out_dim x batch.
Matrix forward_pooled(const ArchitectureSpec& spec, std::span<const double> params, const SequenceBatch& inputs,
                      std::size_t head = 0);

struct LossAndGradient {
    double loss = 0.0;
    Gradient gradient;
};

/// MSE (mean over all batch x output entries) of forward_pooled against
/// `targets`, and its exact gradient through the head, the mean pooling and
/// every LSTM step. Gradient entries for other heads are zero.
LossAndGradient backward_bptt(const ArchitectureSpec& spec, std::span<const double> params,
                              const SequenceBatch& inputs, const Matrix& targets, std::size_t head = 0);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class AdamOptimizer {
public:
    AdamOptimizer(std::size_t size, AdamConfig config = {});

    void step(ParamVector& params, const Gradient& gradient);
    long steps_taken() const { return t_; }

private:
    AdamConfig config_;
    Vector m_;
    Vector v_;
    long t_ = 0;
};

} // namespace risloc::nn
