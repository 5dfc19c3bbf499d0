#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "farsim/dataio.hpp"
#include "farsim/masks.hpp"
#include "farsim/matrix.hpp"

namespace farsim {

enum class Activation { Relu };

struct NetworkSpec {
    std::vector<int> layer_dims;  // input dim, hidden dims..., class count
    Activation activation = Activation::Relu;

    int num_layers() const { return static_cast<int>(layer_dims.size()) - 1; }
    int input_dim() const { return layer_dims.front(); }
    int num_classes() const { return layer_dims.back(); }
    void validate() const;   // at least 2 entries, all dims >= 1
    std::uint64_t hash() const;  // stable content hash, recorded in resilience tables
};

// weights[l] is I_l x J_l with rows indexed by input feature; biases[l] has
// length J_l. Biases live outside the PE array and are never masked.
struct NetworkParams {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    int num_layers() const { return static_cast<int>(weights.size()); }
};

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.0;  // classical momentum, in [0, 1)
    int batch_size = 32;
    std::uint64_t seed = 0;
};

// Test accuracy after each epoch; entry 0 is the accuracy before training.
struct EpochTrace {
    std::vector<double> accuracies;

    int epochs() const { return static_cast<int>(accuracies.size()) - 1; }
};

// Weights drawn from a zero-mean normal scaled by 1/sqrt(fan_in), biases
// zero. Bit-identical for identical (spec, seed).
NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed);

// Class-probability matrix, one softmax row per input row.
Matrix forward(const NetworkParams& params, const Matrix& inputs);

struct LossGrads {
    double loss = 0.0;       // mean cross-entropy over the batch
    NetworkParams grads;     // shaped like the parameters
};

LossGrads loss_and_grads(const NetworkParams& params, const Matrix& inputs,
                         const std::vector<int>& labels);

// Fraction of samples whose argmax prediction equals the label; probability
// ties resolve to the lowest class index.
double evaluate(const NetworkParams& params, const Dataset& test_data);

// Zeroes every masked weight position; biases untouched; idempotent.
NetworkParams apply_mask(NetworkParams params, const MaskSet& masks);

// Masked SGD training. The mask is applied to the incoming params and
// re-applied after every optimizer step, so masked positions are exactly
// zero at all times. Data order is reshuffled each epoch from an
// epoch-indexed stream derived from cfg.seed. Returns the trained params
// and the per-epoch test accuracy trace (entry 0 = before training).
std::pair<NetworkParams, EpochTrace> train_masked(NetworkParams params, const MaskSet& masks,
                                                  const Dataset& train_data,
                                                  const Dataset& test_data, int epochs,
                                                  const TrainConfig& cfg);

// Same loop with an optional early exit: once an accuracy trace entry
// reaches stop_at_accuracy the remaining epochs are skipped and the trace is
// truncated at the crossing. The produced trace prefix is identical to a
// full run's, so first-crossing searches see the same result.
std::pair<NetworkParams, EpochTrace> train_masked_until(NetworkParams params, const MaskSet& masks,
                                                        const Dataset& train_data,
                                                        const Dataset& test_data, int epochs,
                                                        const TrainConfig& cfg,
                                                        std::optional<double> stop_at_accuracy);

// Unmasked training; bit-identical to train_masked with all-ones masks.
std::pair<NetworkParams, EpochTrace> train(NetworkParams params, const Dataset& train_data,
                                           const Dataset& test_data, int epochs,
                                           const TrainConfig& cfg);

}  // namespace farsim
