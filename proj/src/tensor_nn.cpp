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

#include "risloc/tensor_nn.hpp"

#include <cmath>

namespace risloc::nn {

namespace {

using Eigen::Map;

Matrix activate(const Matrix& pre, Activation a)
{
    switch (a) {
    case Activation::Identity:
        return pre;
    case Activation::Relu:
        return pre.cwiseMax(0.0);
    case Activation::Tanh:
        return pre.array().tanh().matrix();
    case Activation::Sigmoid:
        return (1.0 / (1.0 + (-pre.array()).exp())).matrix();
    }
    throw std::logic_error("unknown activation");
}

// Derivative expressed through the activation output (and pre-activation for ReLU).
Matrix activation_grad(const Matrix& pre, const Matrix& out, Activation a)
{
    switch (a) {
    case Activation::Identity:
        return Matrix::Ones(pre.rows(), pre.cols());
    case Activation::Relu:
        return (pre.array() > 0.0).cast<double>().matrix();
    case Activation::Tanh:
        return (1.0 - out.array().square()).matrix();
    case Activation::Sigmoid:
        return (out.array() * (1.0 - out.array())).matrix();
    }
    throw std::logic_error("unknown activation");
}

Matrix sigmoid(const Matrix& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

struct Offsets {
    std::vector<std::size_t> lstm;
    std::vector<std::vector<std::size_t>> heads;
    std::size_t total = 0;
};

Offsets compute_offsets(const ArchitectureSpec& spec)
{
    Offsets o;
    std::size_t at = 0;
    int in = spec.input_dim;
    for (int h : spec.lstm_hidden) {
        o.lstm.push_back(at);
        at += static_cast<std::size_t>(4 * h) * static_cast<std::size_t>(in + h) + 4 * static_cast<std::size_t>(h);
        in = h;
    }
    for (const auto& head : spec.heads) {
        o.heads.emplace_back();
        int hin = spec.trunk_dim();
        for (const auto& layer : head.layers) {
            o.heads.back().push_back(at);
            at += static_cast<std::size_t>(layer.units) * static_cast<std::size_t>(hin) +
                  static_cast<std::size_t>(layer.units);
            hin = layer.units;
        }
    }
    o.total = at;
    return o;
}

int lstm_input_dim(const ArchitectureSpec& spec, std::size_t layer)
{
    return layer == 0 ? spec.input_dim : spec.lstm_hidden[layer - 1];
}

int dense_input_dim(const ArchitectureSpec& spec, std::size_t head, std::size_t layer)
{
    return layer == 0 ? spec.trunk_dim() : spec.heads[head].layers[layer - 1].units;
}

} // namespace

std::string to_string(Activation a)
{
    switch (a) {
    case Activation::Identity:
        return "identity";
    case Activation::Relu:
        return "relu";
    case Activation::Tanh:
        return "tanh";
    case Activation::Sigmoid:
        return "sigmoid";
    }
    return "?";
}

Activation activation_from_string(const std::string& name)
{
    if (name == "identity")
        return Activation::Identity;
    if (name == "relu")
        return Activation::Relu;
    if (name == "tanh")
        return Activation::Tanh;
    if (name == "sigmoid")
        return Activation::Sigmoid;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

HeadSpec mlp_head(const std::vector<int>& hidden, int outputs, Activation activation)
{
    HeadSpec head;
    for (int units : hidden)
        head.layers.push_back({units, activation});
    head.layers.push_back({outputs, Activation::Identity});
    return head;
}

std::size_t ArchitectureSpec::parameter_count() const { return compute_offsets(*this).total; }

void ArchitectureSpec::validate() const
{
    if (input_dim < 1)
        throw std::invalid_argument("input dimension must be >= 1");
    for (int h : lstm_hidden)
        if (h < 1)
            throw std::invalid_argument("LSTM hidden size must be >= 1");
    if (heads.empty())
        throw std::invalid_argument("architecture needs at least one head");
    for (const auto& head : heads) {
        if (head.layers.empty())
            throw std::invalid_argument("head needs at least one layer");
        for (const auto& layer : head.layers)
            if (layer.units < 1)
                throw std::invalid_argument("dense layer size must be >= 1");
    }
}

NetworkWeights unflatten(const ArchitectureSpec& spec, std::span<const double> params)
{
    const NetworkView view(spec, params);
    NetworkWeights w;
    for (std::size_t l = 0; l < spec.lstm_hidden.size(); ++l)
        w.lstm.push_back({view.lstm_w(l), view.lstm_b(l)});
    for (std::size_t h = 0; h < spec.heads.size(); ++h) {
        w.heads.emplace_back();
        for (std::size_t k = 0; k < spec.heads[h].layers.size(); ++k)
            w.heads.back().push_back({view.dense_w(h, k), view.dense_b(h, k)});
    }
    return w;
}

ParamVector flatten(const ArchitectureSpec& spec, const NetworkWeights& weights)
{
    const Offsets o = compute_offsets(spec);
    ParamVector out = ParamVector::Zero(static_cast<Eigen::Index>(o.total));
    auto put = [&](std::size_t at, const RowMatrix& m, const Vector& b, Eigen::Index rows, Eigen::Index cols) {
        if (m.rows() != rows || m.cols() != cols || b.size() != rows)
            throw std::invalid_argument("weight block shape does not match architecture");
        Map<RowMatrix>(out.data() + at, rows, cols) = m;
        Map<Vector>(out.data() + at + rows * cols, rows) = b;
    };
    if (weights.lstm.size() != spec.lstm_hidden.size() || weights.heads.size() != spec.heads.size())
        throw std::invalid_argument("weight structure does not match architecture");
    for (std::size_t l = 0; l < spec.lstm_hidden.size(); ++l) {
        const int h = spec.lstm_hidden[l];
        put(o.lstm[l], weights.lstm[l].w, weights.lstm[l].b, 4 * h, lstm_input_dim(spec, l) + h);
    }
    for (std::size_t hd = 0; hd < spec.heads.size(); ++hd) {
        if (weights.heads[hd].size() != spec.heads[hd].layers.size())
            throw std::invalid_argument("head depth does not match architecture");
        for (std::size_t k = 0; k < spec.heads[hd].layers.size(); ++k)
            put(o.heads[hd][k], weights.heads[hd][k].w, weights.heads[hd][k].b, spec.heads[hd].layers[k].units,
                dense_input_dim(spec, hd, k));
    }
    return out;
}

ParamVector initialize_params(const ArchitectureSpec& spec, Rng& rng)
{
    spec.validate();
    const Offsets o = compute_offsets(spec);
    ParamVector out(static_cast<Eigen::Index>(o.total));
    auto fill = [&](std::size_t at, std::size_t count, int fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::size_t i = 0; i < count; ++i)
            out[static_cast<Eigen::Index>(at + i)] = u(rng);
    };
    for (std::size_t l = 0; l < spec.lstm_hidden.size(); ++l) {
        const int h = spec.lstm_hidden[l];
        const int fan_in = lstm_input_dim(spec, l) + h;
        fill(o.lstm[l], static_cast<std::size_t>(4 * h) * static_cast<std::size_t>(fan_in + 1), fan_in);
    }
    for (std::size_t hd = 0; hd < spec.heads.size(); ++hd)
        for (std::size_t k = 0; k < spec.heads[hd].layers.size(); ++k) {
            const int fan_in = dense_input_dim(spec, hd, k);
            const int units = spec.heads[hd].layers[k].units;
            fill(o.heads[hd][k], static_cast<std::size_t>(units) * static_cast<std::size_t>(fan_in + 1), fan_in);
        }
    return out;
}

LSTMState LSTMState::zeros(const ArchitectureSpec& spec)
{
    LSTMState s;
    for (int h : spec.lstm_hidden) {
        s.h.push_back(Vector::Zero(h));
        s.c.push_back(Vector::Zero(h));
    }
    return s;
}

NetworkView::NetworkView(const ArchitectureSpec& spec, std::span<const double> params)
    : spec_(&spec), params_(params)
{
    const Offsets o = compute_offsets(spec);
    if (params.size() != o.total)
        throw std::invalid_argument("parameter vector has " + std::to_string(params.size()) +
                                    " entries, architecture needs " + std::to_string(o.total));
    lstm_offsets_ = o.lstm;
    head_offsets_ = o.heads;
}

Eigen::Map<const RowMatrix> NetworkView::lstm_w(std::size_t layer) const
{
    const int h = spec_->lstm_hidden[layer];
    return {params_.data() + lstm_offsets_[layer], 4 * h, lstm_input_dim(*spec_, layer) + h};
}

Eigen::Map<const Vector> NetworkView::lstm_b(std::size_t layer) const
{
    const int h = spec_->lstm_hidden[layer];
    const std::size_t w_size = static_cast<std::size_t>(4 * h) * static_cast<std::size_t>(lstm_input_dim(*spec_, layer) + h);
    return {params_.data() + lstm_offsets_[layer] + w_size, 4 * h};
}

Eigen::Map<const RowMatrix> NetworkView::dense_w(std::size_t head, std::size_t layer) const
{
    return {params_.data() + head_offsets_[head][layer], spec_->heads[head].layers[layer].units,
            dense_input_dim(*spec_, head, layer)};
}

Eigen::Map<const Vector> NetworkView::dense_b(std::size_t head, std::size_t layer) const
{
    const int units = spec_->heads[head].layers[layer].units;
    const std::size_t w_size =
        static_cast<std::size_t>(units) * static_cast<std::size_t>(dense_input_dim(*spec_, head, layer));
    return {params_.data() + head_offsets_[head][layer] + w_size, units};
}

Vector NetworkView::lstm_step(LSTMState& state, const Vector& input) const
{
    if (input.size() != spec_->input_dim)
        throw std::invalid_argument("LSTM input has wrong dimension");
    if (state.h.size() != spec_->lstm_hidden.size())
        throw std::invalid_argument("LSTM state depth does not match architecture");
    Vector x = input;
    for (std::size_t l = 0; l < spec_->lstm_hidden.size(); ++l) {
        const Eigen::Index h = spec_->lstm_hidden[l];
        if (state.h[l].size() != h || state.c[l].size() != h)
            throw std::invalid_argument("LSTM state width does not match architecture");
        Vector xh(x.size() + h);
        xh << x, state.h[l];
        const Vector z = lstm_w(l) * xh + lstm_b(l);
        const Vector i = sigmoid(z.segment(0, h));
        const Vector f = sigmoid(z.segment(h, h));
        const Vector g = z.segment(2 * h, h).array().tanh().matrix();
        const Vector o = sigmoid(z.segment(3 * h, h));
        state.c[l] = f.cwiseProduct(state.c[l]) + i.cwiseProduct(g);
        state.h[l] = o.cwiseProduct(state.c[l].array().tanh().matrix());
        x = state.h[l];
    }
    return x;
}

Vector NetworkView::feed_forward(std::size_t head, const Vector& input) const
{
    if (input.size() != spec_->trunk_dim())
        throw std::invalid_argument("head input has wrong dimension");
    Vector a = input;
    const auto& layers = spec_->heads.at(head).layers;
    for (std::size_t k = 0; k < layers.size(); ++k)
        a = activate(dense_w(head, k) * a + dense_b(head, k), layers[k].activation);
    return a;
}

double mse_loss(std::span<const double> pred, std::span<const double> target)
{
    if (pred.size() != target.size())
        throw std::invalid_argument("mse_loss: length mismatch");
    if (pred.empty())
        return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        sum += d * d;
    }
    return sum / static_cast<double>(pred.size());
}

namespace {

struct LstmLayerCache {
    std::vector<Matrix> xh;    // (in + H) x B, per step
    std::vector<Matrix> gates; // 4H x B activated [i, f, g, o]
    std::vector<Matrix> c;     // T + 1 entries, c[0] = 0
    std::vector<Matrix> tanh_c;
};

struct ForwardCache {
    std::vector<LstmLayerCache> layers;
    Matrix pooled;
    std::vector<Matrix> head_pre;
    std::vector<Matrix> head_out; // head_out[0] = pooled input
};

void check_inputs(const ArchitectureSpec& spec, const SequenceBatch& inputs)
{
    if (inputs.empty())
        throw std::invalid_argument("sequence must have at least one step");
    if (spec.lstm_hidden.empty() && inputs.size() != 1)
        throw std::invalid_argument("feed-forward network takes a single step");
    const Eigen::Index batch = inputs[0].cols();
    for (const auto& x : inputs)
        if (x.rows() != spec.input_dim || x.cols() != batch)
            throw std::invalid_argument("sequence step has wrong shape");
}

ForwardCache forward_cached(const NetworkView& view, const SequenceBatch& inputs, std::size_t head)
{
    const auto& spec = view.spec();
    check_inputs(spec, inputs);
    const std::size_t steps = inputs.size();
    const Eigen::Index batch = inputs[0].cols();
    ForwardCache cache;

    if (spec.lstm_hidden.empty()) {
        cache.pooled = inputs[0];
    } else {
        std::vector<Matrix> below = inputs;
        for (std::size_t l = 0; l < spec.lstm_hidden.size(); ++l) {
            const Eigen::Index h = spec.lstm_hidden[l];
            const Eigen::Index in = below[0].rows();
            const auto w = view.lstm_w(l);
            const auto b = view.lstm_b(l);
            LstmLayerCache lc;
            lc.c.push_back(Matrix::Zero(h, batch));
            Matrix h_prev = Matrix::Zero(h, batch);
            std::vector<Matrix> outputs;
            for (std::size_t t = 0; t < steps; ++t) {
                Matrix xh(in + h, batch);
                xh.topRows(in) = below[t];
                xh.bottomRows(h) = h_prev;
                Matrix z = w * xh;
                z.colwise() += b;
                Matrix gates(4 * h, batch);
                gates.topRows(2 * h) = sigmoid(z.topRows(2 * h));
                gates.middleRows(2 * h, h) = z.middleRows(2 * h, h).array().tanh().matrix();
                gates.bottomRows(h) = sigmoid(z.bottomRows(h));
                Matrix c = gates.middleRows(h, h).cwiseProduct(lc.c.back()) +
                           gates.topRows(h).cwiseProduct(gates.middleRows(2 * h, h));
                Matrix tc = c.array().tanh().matrix();
                h_prev = gates.bottomRows(h).cwiseProduct(tc);
                outputs.push_back(h_prev);
                lc.xh.push_back(std::move(xh));
                lc.gates.push_back(std::move(gates));
                lc.c.push_back(std::move(c));
                lc.tanh_c.push_back(std::move(tc));
            }
            cache.layers.push_back(std::move(lc));
            below = std::move(outputs);
        }
        cache.pooled = Matrix::Zero(spec.trunk_dim(), batch);
        for (const auto& o : below)
            cache.pooled += o;
        cache.pooled /= static_cast<double>(steps);
    }

    cache.head_out.push_back(cache.pooled);
    const auto& layers = spec.heads.at(head).layers;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        Matrix pre = view.dense_w(head, k) * cache.head_out.back();
        pre.colwise() += view.dense_b(head, k);
        cache.head_out.push_back(activate(pre, layers[k].activation));
        cache.head_pre.push_back(std::move(pre));
    }
    return cache;
}

} // namespace

Matrix forward_pooled(const ArchitectureSpec& spec, std::span<const double> params, const SequenceBatch& inputs,
                      std::size_t head)
{
    const NetworkView view(spec, params);
    return forward_cached(view, inputs, head).head_out.back();
}

LossAndGradient backward_bptt(const ArchitectureSpec& spec, std::span<const double> params,
                              const SequenceBatch& inputs, const Matrix& targets, std::size_t head)
{
    const NetworkView view(spec, params);
    ForwardCache cache = forward_cached(view, inputs, head);
    const Matrix& pred = cache.head_out.back();
    if (targets.rows() != pred.rows() || targets.cols() != pred.cols())
        throw std::invalid_argument("targets shape does not match network output");

    const Offsets o = compute_offsets(spec);
    LossAndGradient out;
    out.gradient = Gradient::Zero(static_cast<Eigen::Index>(o.total));
    const Matrix residual = pred - targets;
    const double n = static_cast<double>(residual.size());
    out.loss = residual.squaredNorm() / n;
    if (!std::isfinite(out.loss))
        throw NumericalError("non-finite loss in forward pass");

    // Dense head, top to bottom.
    Matrix d_a = (2.0 / n) * residual;
    const auto& layers = spec.heads[head].layers;
    for (std::size_t k = layers.size(); k-- > 0;) {
        const Matrix d_pre = d_a.cwiseProduct(activation_grad(cache.head_pre[k], cache.head_out[k + 1], layers[k].activation));
        const auto rows = d_pre.rows();
        const auto cols = cache.head_out[k].rows();
        Map<RowMatrix>(out.gradient.data() + o.heads[head][k], rows, cols).noalias() +=
            d_pre * cache.head_out[k].transpose();
        Map<Vector>(out.gradient.data() + o.heads[head][k] + rows * cols, rows) += d_pre.rowwise().sum();
        d_a = view.dense_w(head, k).transpose() * d_pre;
    }

    if (!spec.lstm_hidden.empty()) {
        const std::size_t steps = inputs.size();
        const Eigen::Index batch = inputs[0].cols();
        // Mean pooling spreads the pooled gradient evenly over time.
        std::vector<Matrix> d_out(steps, d_a / static_cast<double>(steps));
        for (std::size_t l = spec.lstm_hidden.size(); l-- > 0;) {
            const Eigen::Index h = spec.lstm_hidden[l];
            const Eigen::Index in = lstm_input_dim(spec, l);
            const auto& lc = cache.layers[l];
            const auto w = view.lstm_w(l);
            Map<RowMatrix> dw(out.gradient.data() + o.lstm[l], 4 * h, in + h);
            Map<Vector> db(out.gradient.data() + o.lstm[l] + 4 * h * (in + h), 4 * h);
            Matrix dh_next = Matrix::Zero(h, batch);
            Matrix dc_next = Matrix::Zero(h, batch);
            std::vector<Matrix> d_below(steps);
            for (std::size_t t = steps; t-- > 0;) {
                const Matrix& g = lc.gates[t];
                const auto gi = g.topRows(h);
                const auto gf = g.middleRows(h, h);
                const auto gg = g.middleRows(2 * h, h);
                const auto go = g.bottomRows(h);
                const Matrix dh = d_out[t] + dh_next;
                const Matrix dc = dc_next + dh.cwiseProduct(go).cwiseProduct(
                                                (1.0 - lc.tanh_c[t].array().square()).matrix());
                Matrix dz(4 * h, batch);
                dz.topRows(h) = dc.cwiseProduct(gg).cwiseProduct((gi.array() * (1.0 - gi.array())).matrix());
                dz.middleRows(h, h) =
                    dc.cwiseProduct(lc.c[t]).cwiseProduct((gf.array() * (1.0 - gf.array())).matrix());
                dz.middleRows(2 * h, h) = dc.cwiseProduct(gi).cwiseProduct((1.0 - gg.array().square()).matrix());
                dz.bottomRows(h) = dh.cwiseProduct(lc.tanh_c[t]).cwiseProduct((go.array() * (1.0 - go.array())).matrix());
                dc_next = dc.cwiseProduct(gf);
                dw.noalias() += dz * lc.xh[t].transpose();
                db += dz.rowwise().sum();
                const Matrix dxh = w.transpose() * dz;
                d_below[t] = dxh.topRows(in);
                dh_next = dxh.bottomRows(h);
            }
            d_out = std::move(d_below);
        }
    }

    if (!out.gradient.allFinite())
        throw NumericalError("non-finite gradient in backward pass");
    return out;
}

AdamOptimizer::AdamOptimizer(std::size_t size, AdamConfig config)
    : config_(config), m_(Vector::Zero(static_cast<Eigen::Index>(size))),
      v_(Vector::Zero(static_cast<Eigen::Index>(size)))
{
}

void AdamOptimizer::step(ParamVector& params, const Gradient& gradient)
{
    if (params.size() != m_.size() || gradient.size() != m_.size())
        throw std::invalid_argument("Adam: parameter/gradient length mismatch");
    ++t_;
    m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * gradient;
    v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * gradient.cwiseProduct(gradient);
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    params.array() -= config_.learning_rate * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + config_.epsilon);
}

} // namespace risloc::nn
