#include "farsim/numnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "farsim/rng.hpp"

namespace farsim {

namespace {

void check_finite_cfg(const TrainConfig& cfg, int train_size) {
    if (cfg.learning_rate <= 0.0) throw std::invalid_argument("train: learning_rate must be > 0");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
        throw std::invalid_argument("train: momentum must be in [0, 1)");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (cfg.batch_size > train_size)
        throw std::invalid_argument("train: batch_size exceeds training-set size");
}

void check_mask_shapes(const NetworkParams& params, const MaskSet& masks) {
    if (static_cast<int>(masks.layers.size()) != params.num_layers())
        throw std::invalid_argument("mask: layer count mismatch");
    for (int l = 0; l < params.num_layers(); ++l) {
        const Mask& m = masks.layers[l];
        if (m.rows != params.weights[l].rows() || m.cols != params.weights[l].cols())
            throw std::invalid_argument("mask: shape mismatch");
    }
}

void add_bias_rows(Matrix& z, const std::vector<double>& bias) {
    const int n = z.cols();
#pragma omp parallel for schedule(static) if (z.rows() > 64)
    for (int i = 0; i < z.rows(); ++i) {
        double* row = z.row(i);
        for (int j = 0; j < n; ++j) row[j] += bias[j];
    }
}

void relu_inplace(Matrix& z) {
    const int n = z.cols();
#pragma omp parallel for schedule(static) if (z.rows() > 64)
    for (int i = 0; i < z.rows(); ++i) {
        double* row = z.row(i);
        for (int j = 0; j < n; ++j) row[j] = row[j] > 0.0 ? row[j] : 0.0;
    }
}

// Row-wise softmax with max subtraction; every row sums to 1.
void softmax_rows(Matrix& z) {
    const int n = z.cols();
#pragma omp parallel for schedule(static) if (z.rows() > 64)
    for (int i = 0; i < z.rows(); ++i) {
        double* row = z.row(i);
        double mx = row[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (int j = 0; j < n; ++j) row[j] /= sum;
    }
}

// Runs the net on `inputs`; when `acts` is non-null it receives the layer
// activations a_0 = inputs .. a_{L-1} needed by the backward pass.
Matrix forward_impl(const NetworkParams& params, const Matrix& inputs,
                    std::vector<Matrix>* acts) {
    const int layers = params.num_layers();
    if (layers < 1) throw std::invalid_argument("forward: empty network");
    if (inputs.cols() != params.weights[0].rows())
        throw std::invalid_argument("forward: input dimension mismatch");
    if (acts) {
        acts->clear();
        acts->push_back(inputs);
    }
    Matrix cur = inputs;
    Matrix z;
    for (int l = 0; l < layers; ++l) {
        linalg::matmul(cur, params.weights[l], z);
        add_bias_rows(z, params.biases[l]);
        if (l + 1 < layers) {
            relu_inplace(z);
            if (acts) acts->push_back(z);
        } else {
            softmax_rows(z);
        }
        cur = z;
    }
    return cur;
}

void check_labels(const std::vector<int>& labels, int batch, int classes) {
    if (static_cast<int>(labels.size()) != batch)
        throw std::invalid_argument("loss: label count mismatch");
    for (int y : labels)
        if (y < 0 || y >= classes) throw std::out_of_range("loss: label out of range");
}

NetworkParams zeros_like(const NetworkParams& params) {
    NetworkParams out;
    out.weights.reserve(params.weights.size());
    out.biases.reserve(params.biases.size());
    for (const Matrix& w : params.weights) out.weights.emplace_back(w.rows(), w.cols());
    for (const auto& b : params.biases) out.biases.emplace_back(b.size(), 0.0);
    return out;
}

Matrix gather_rows(const Matrix& src, const std::vector<int>& order, int begin, int end) {
    Matrix out(end - begin, src.cols());
    for (int i = begin; i < end; ++i) {
        const double* from = src.row(order[i]);
        std::copy(from, from + src.cols(), out.row(i - begin));
    }
    return out;
}

void zero_masked(NetworkParams& params, const MaskSet& masks) {
    for (int l = 0; l < params.num_layers(); ++l) {
        Matrix& w = params.weights[l];
        const Mask& m = masks.layers[l];
        for (int i = 0; i < w.rows(); ++i)
            for (int j = 0; j < w.cols(); ++j)
                if (!m.at(i, j)) w(i, j) = 0.0;
    }
}

// Core SGD loop, shared by the masked and unmasked entry points so that
// all-ones masks and no masks take the exact same arithmetic path.
std::pair<NetworkParams, EpochTrace> train_impl(NetworkParams params, const MaskSet* masks,
                                                const Dataset& train_data,
                                                const Dataset& test_data, int epochs,
                                                const TrainConfig& cfg,
                                                std::optional<double> stop_at) {
    if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
    train_data.validate();
    test_data.validate();
    check_finite_cfg(cfg, train_data.size());
    if (masks) {
        check_mask_shapes(params, *masks);
        zero_masked(params, *masks);
    }

    EpochTrace trace;
    trace.accuracies.push_back(evaluate(params, test_data));
    if (stop_at && trace.accuracies.back() >= *stop_at) return {std::move(params), trace};

    NetworkParams velocity = zeros_like(params);
    const int n = train_data.size();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        // Fisher-Yates with an epoch-indexed stream: deterministic, and
        // epoch k's order does not depend on how many epochs ran before.
        Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.next_below(static_cast<std::uint64_t>(i) + 1));
            std::swap(order[i], order[j]);
        }

        for (int start = 0; start < n; start += cfg.batch_size) {
            const int end = std::min(n, start + cfg.batch_size);
            Matrix bx = gather_rows(train_data.inputs, order, start, end);
            std::vector<int> by(end - start);
            for (int i = start; i < end; ++i) by[i - start] = train_data.labels[order[i]];

            LossGrads lg = loss_and_grads(params, bx, by);

            for (int l = 0; l < params.num_layers(); ++l) {
                Matrix& w = params.weights[l];
                Matrix& vw = velocity.weights[l];
                Matrix& gw = lg.grads.weights[l];
                const Mask* m = masks ? &masks->layers[l] : nullptr;
                for (int i = 0; i < w.rows(); ++i) {
                    for (int j = 0; j < w.cols(); ++j) {
                        if (m && !m->at(i, j)) {
                            w(i, j) = 0.0;  // pruned position stays exactly zero
                            continue;
                        }
                        double& v = vw(i, j);
                        v = cfg.momentum * v - cfg.learning_rate * gw(i, j);
                        w(i, j) += v;
                    }
                }
                auto& b = params.biases[l];
                auto& vb = velocity.biases[l];
                const auto& gb = lg.grads.biases[l];
                for (std::size_t j = 0; j < b.size(); ++j) {
                    vb[j] = cfg.momentum * vb[j] - cfg.learning_rate * gb[j];
                    b[j] += vb[j];
                }
            }
        }

        trace.accuracies.push_back(evaluate(params, test_data));
        if (stop_at && trace.accuracies.back() >= *stop_at) break;
    }
    return {std::move(params), trace};
}

}  // namespace

void NetworkSpec::validate() const {
    if (layer_dims.size() < 2)
        throw std::invalid_argument("NetworkSpec: need at least input and output dims");
    for (int d : layer_dims)
        if (d < 1) throw std::invalid_argument("NetworkSpec: all dims must be >= 1");
}

std::uint64_t NetworkSpec::hash() const {
    std::uint64_t h = mix64(0x6e756d6e65740001ULL);
    for (int d : layer_dims) h = mix64(h ^ static_cast<std::uint64_t>(d));
    h = mix64(h ^ static_cast<std::uint64_t>(activation));
    return h;
}

NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    NetworkParams params;
    for (int l = 0; l + 1 < static_cast<int>(spec.layer_dims.size()); ++l) {
        const int in = spec.layer_dims[l];
        const int out = spec.layer_dims[l + 1];
        Matrix w(in, out);
        const double scale = 1.0 / std::sqrt(static_cast<double>(in));
        for (int i = 0; i < in; ++i)
            for (int j = 0; j < out; ++j) w(i, j) = rng.next_normal() * scale;
        params.weights.push_back(std::move(w));
        params.biases.emplace_back(out, 0.0);
    }
    return params;
}

Matrix forward(const NetworkParams& params, const Matrix& inputs) {
    return forward_impl(params, inputs, nullptr);
}

LossGrads loss_and_grads(const NetworkParams& params, const Matrix& inputs,
                         const std::vector<int>& labels) {
    const int layers = params.num_layers();
    const int batch = inputs.rows();
    if (batch < 1) throw std::invalid_argument("loss: empty batch");
    check_labels(labels, batch, params.weights[layers - 1].cols());

    std::vector<Matrix> acts;
    Matrix probs = forward_impl(params, inputs, &acts);

    double loss = 0.0;
    for (int i = 0; i < batch; ++i)
        loss -= std::log(std::max(probs(i, labels[i]), 1e-300));
    loss /= batch;

    LossGrads out;
    out.loss = loss;
    out.grads = zeros_like(params);

    // delta = (P - onehot) / batch, then backpropagate
    Matrix delta = std::move(probs);
    for (int i = 0; i < batch; ++i) delta(i, labels[i]) -= 1.0;
    const double inv_batch = 1.0 / batch;
    for (int i = 0; i < batch; ++i) {
        double* row = delta.row(i);
        for (int j = 0; j < delta.cols(); ++j) row[j] *= inv_batch;
    }

    for (int l = layers - 1; l >= 0; --l) {
        linalg::matmul_transa(acts[l], delta, out.grads.weights[l]);
        auto& gb = out.grads.biases[l];
        for (int i = 0; i < batch; ++i) {
            const double* row = delta.row(i);
            for (std::size_t j = 0; j < gb.size(); ++j) gb[j] += row[j];
        }
        if (l > 0) {
            Matrix prev;
            linalg::matmul_transb(delta, params.weights[l], prev);
            // ReLU gate: activation 0 means the unit was clamped
            for (int i = 0; i < batch; ++i) {
                const double* a = acts[l].row(i);
                double* row = prev.row(i);
                for (int j = 0; j < prev.cols(); ++j)
                    if (a[j] <= 0.0) row[j] = 0.0;
            }
            delta = std::move(prev);
        }
    }
    return out;
}

double evaluate(const NetworkParams& params, const Dataset& test_data) {
    if (test_data.size() == 0) throw std::invalid_argument("evaluate: empty test set");
    Matrix probs = forward(params, test_data.inputs);
    int correct = 0;
    for (int i = 0; i < probs.rows(); ++i) {
        const double* row = probs.row(i);
        int best = 0;
        for (int j = 1; j < probs.cols(); ++j)
            if (row[j] > row[best]) best = j;  // strict: ties keep the lowest index
        if (best == test_data.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / probs.rows();
}

NetworkParams apply_mask(NetworkParams params, const MaskSet& masks) {
    check_mask_shapes(params, masks);
    zero_masked(params, masks);
    return params;
}

std::pair<NetworkParams, EpochTrace> train_masked(NetworkParams params, const MaskSet& masks,
                                                  const Dataset& train_data,
                                                  const Dataset& test_data, int epochs,
                                                  const TrainConfig& cfg) {
    return train_impl(std::move(params), &masks, train_data, test_data, epochs, cfg, std::nullopt);
}

std::pair<NetworkParams, EpochTrace> train_masked_until(NetworkParams params, const MaskSet& masks,
                                                        const Dataset& train_data,
                                                        const Dataset& test_data, int epochs,
                                                        const TrainConfig& cfg,
                                                        std::optional<double> stop_at_accuracy) {
    return train_impl(std::move(params), &masks, train_data, test_data, epochs, cfg,
                      stop_at_accuracy);
}

std::pair<NetworkParams, EpochTrace> train(NetworkParams params, const Dataset& train_data,
                                           const Dataset& test_data, int epochs,
                                           const TrainConfig& cfg) {
    return train_impl(std::move(params), nullptr, train_data, test_data, epochs, cfg,
                      std::nullopt);
}

}  // namespace farsim
