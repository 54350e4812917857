#pragma once

#include "nnquad/network.hpp"
#include "nnquad/numerics.hpp"

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace nnquad {

struct TrainConfig {
    // Input width, hidden widths..., output width. A {1, 100, 1} config is one hidden
    // layer of 100 units plus the affine output layer.
    std::vector<std::size_t> layer_widths{1, 100, 1};
    Activation activation = Activation::relu;
    std::size_t epochs = 200;
    double learning_rate = 0.001;
    std::size_t batch_size = 20;
    std::uint64_t seed = 0;
    bool shuffle = true;

    // Throws ConfigError.
    void validate() const;
};

// JSON object with the field names above; missing fields keep their defaults.
TrainConfig parse_train_config(std::string_view json_text);

struct Dataset {
    std::vector<Vector> inputs;
    std::vector<Vector> targets;

    // Throws ValidationError for empty or inconsistently shaped data.
    void validate() const;
    std::size_t size() const noexcept { return inputs.size(); }
};

// Mean over samples of the squared error averaged over output components.
double mse_loss(const std::vector<Vector>& pred, const std::vector<Vector>& target);

struct TrainResult {
    Network network;
    // losses[e] is the full-dataset MSE after e epochs; losses[0] is the initialization.
    std::vector<double> losses;
};

// Plain minibatch SGD on the MSE loss. Weights and biases start uniform in
// [-1/sqrt(fan_in), 1/sqrt(fan_in)]; each epoch reshuffles (if enabled) and keeps the
// trailing short batch. Deterministic for a fixed config. Throws TrainingDiverged when
// the loss stops being finite.
TrainResult train(const TrainConfig& cfg, const Dataset& data);

// Seeded initialization, i.e. the result of train() with zero epochs.
Network initialize_network(const TrainConfig& cfg);

// Backprop gradient of mse_loss with respect to all parameters (layer by layer, weights
// row-major then biases). Dense-only networks.
std::vector<double> loss_gradient(const Network& net, const Dataset& data);

// Largest |backprop - central difference| / max(1, |backprop|, |difference|) over all
// parameters, difference step 1e-6.
double gradient_check(const Network& net, const Dataset& data);

}  // namespace nnquad
