#include "doctest.h"

#include "nnquad/errors.hpp"
#include "nnquad/experiment.hpp"
#include "nnquad/trainer.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <numeric>

using namespace nnquad;
using nnquad::testing::random_relu_net;

namespace {

Dataset builtin_dataset() {
    Dataset d;
    for (int i = 0; i <= 50; ++i) {
        const double x = 0.1 * i;
        d.inputs.push_back(Vector{x});
        d.targets.push_back(Vector{paperfn(x)});
    }
    return d;
}

std::vector<Vector> predict(const Network& net, const Dataset& d) {
    std::vector<Vector> out;
    for (const Vector& x : d.inputs)
        out.push_back(forward(net, x));
    return out;
}

}  // namespace

TEST_CASE("mse examples") {
    CHECK(mse_loss({Vector{1.0, 2.0}}, {Vector{1.0, 2.0}}) == 0.0);
    CHECK(mse_loss({Vector{0.0}}, {Vector{2.0}}) == 4.0);
    CHECK(mse_loss({Vector{0.0}, Vector{0.0}}, {Vector{1.0}, Vector{3.0}}) == 5.0);
    CHECK(mse_loss({Vector{0.0, 0.0}}, {Vector{1.0, 3.0}}) == 5.0);
    CHECK_THROWS_AS(mse_loss({Vector{0.0}}, {Vector{0.0}, Vector{1.0}}), ShapeError);
    CHECK_THROWS_AS(mse_loss({Vector{0.0}}, {Vector{0.0, 1.0}}), ShapeError);
}

TEST_CASE("zero epochs returns the seeded initialization") {
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 5;
    const TrainResult r = train(cfg, builtin_dataset());
    CHECK(save_network(r.network) == save_network(initialize_network(cfg)));
    REQUIRE(r.losses.size() == 1);
    CHECK(r.losses[0] == mse_loss(predict(r.network, builtin_dataset()), builtin_dataset().targets));

    // Initial weights lie within +-1/sqrt(fan_in).
    const auto& hidden = std::get<DenseLayer>(r.network.layers()[0]);
    for (std::size_t i = 0; i < 100; ++i)
        CHECK(std::fabs(hidden.weight(i, 0)) <= 1.0);
    const auto& out = std::get<DenseLayer>(r.network.layers()[1]);
    for (double w : out.weight.row(0))
        CHECK(std::fabs(w) <= 0.1);

    TrainConfig other = cfg;
    other.seed = 6;
    CHECK(save_network(initialize_network(other)) != save_network(initialize_network(cfg)));
}

TEST_CASE("a constant target is fitted") {
    TrainConfig cfg;
    cfg.layer_widths = {1, 16, 1};
    cfg.epochs = 500;
    cfg.learning_rate = 0.01;
    Dataset d;
    for (int i = 0; i <= 50; ++i) {
        d.inputs.push_back(Vector{0.1 * i});
        d.targets.push_back(Vector{3.0});
    }
    const TrainResult r = train(cfg, d);
    CHECK(r.losses.size() == 501);
    CHECK(r.losses.back() <= 1e-3);
    CHECK(mse_loss(predict(r.network, d), d.targets) == r.losses.back());
}

TEST_CASE("training is deterministic") {
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 9;
    const Dataset d = builtin_dataset();
    const TrainResult a = train(cfg, d);
    const TrainResult b = train(cfg, d);
    CHECK(save_network(a.network) == save_network(b.network));
    CHECK(a.losses == b.losses);
    cfg.shuffle = false;
    CHECK(save_network(train(cfg, d).network) != save_network(a.network));
}

TEST_CASE("gradient check on a linear net") {
    std::vector<Layer> layers;
    layers.emplace_back(DenseLayer{Matrix::from_rows({{0.7}}), Vector{-0.2}, Activation::identity});
    const Network net(1, std::move(layers));
    Dataset d;
    d.inputs = {Vector{0.5}, Vector{-1.0}, Vector{2.0}};
    d.targets = {Vector{1.0}, Vector{0.0}, Vector{-1.0}};
    CHECK(gradient_check(net, d) <= 1e-7);

    // Analytic gradient of the mean of (w x + b - y)^2.
    const std::vector<double> g = loss_gradient(net, d);
    REQUIRE(g.size() == 2);
    double gw = 0.0, gb = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double x = d.inputs[i][0];
        const double r = 0.7 * x - 0.2 - d.targets[i][0];
        gw += 2.0 * r * x / 3.0;
        gb += 2.0 * r / 3.0;
    }
    CHECK(g[0] == doctest::Approx(gw).epsilon(1e-14));
    CHECK(g[1] == doctest::Approx(gb).epsilon(1e-14));
}

TEST_CASE("gradient vanishes where predictions are exact") {
    std::vector<Layer> layers;
    layers.emplace_back(DenseLayer{Matrix::from_rows({{2.0}}), Vector{1.0}, Activation::identity});
    const Network net(1, std::move(layers));
    Dataset d;
    d.inputs = {Vector{0.0}, Vector{1.0}};
    d.targets = {Vector{1.0}, Vector{3.0}};
    for (double g : loss_gradient(net, d))
        CHECK(g == 0.0);
    CHECK(gradient_check(net, d) <= 1e-9);
}

TEST_CASE("gradient check on random relu nets") {
    Rng rng(80);
    for (int trial = 0; trial < 20; ++trial) {
        const Network net = random_relu_net(rng, 2, 2, 6, 2);
        REQUIRE(net.parameter_count() <= 200);
        Dataset d;
        for (int i = 0; i < 8; ++i) {
            d.inputs.push_back(Vector{rng.uniform(-1, 1), rng.uniform(-1, 1)});
            d.targets.push_back(Vector{rng.uniform(-1, 1), rng.uniform(-1, 1)});
        }
        CHECK(gradient_check(net, d) <= 1e-5);
    }
    for (int trial = 0; trial < 5; ++trial) {
        const Network net = random_relu_net(rng, 1, 1, 8, 1, Activation::tanh);
        Dataset d;
        for (int i = 0; i < 5; ++i) {
            d.inputs.push_back(Vector{rng.uniform(-2, 2)});
            d.targets.push_back(Vector{rng.uniform(-1, 1)});
        }
        CHECK(gradient_check(net, d) <= 1e-6);
    }
}

TEST_CASE("full-size training run") {
    // 51 samples of cos x - x^2 + 4 - 1/(x+1) on [0, 5], one hidden layer of 100,
    // 200 epochs of SGD at 0.001 with batches of 20. Measured final MSE for seeds
    // 0/1/2 is 0.609/0.484/0.734.
    const Dataset d = builtin_dataset();
    double best = INFINITY;
    for (std::uint64_t seed : {0, 1, 2}) {
        TrainConfig cfg;
        cfg.seed = seed;
        const TrainResult r = train(cfg, d);
        REQUIRE(r.losses.size() == 201);
        const double tail = std::accumulate(r.losses.end() - 10, r.losses.end(), 0.0) / 10.0;
        CHECK(tail <= r.losses.front());
        best = std::min(best, r.losses.back());
    }
    CHECK(best <= 0.6);
}

TEST_CASE("divergence is reported with its epoch") {
    TrainConfig cfg;
    cfg.learning_rate = 1e6;
    cfg.epochs = 50;
    try {
        train(cfg, builtin_dataset());
        FAIL("expected TrainingDiverged");
    } catch (const TrainingDiverged& e) {
        CHECK(e.epoch() >= 1);
        CHECK(e.epoch() <= 50);
    }
}

TEST_CASE("config validation and parsing") {
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.activation = Activation::sigmoid;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.layer_widths = {1};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    const TrainConfig parsed = parse_train_config(
        R"({"layer_widths": [1, 8, 1], "activation": "tanh", "epochs": 3, "learning_rate": 0.5,
            "batch_size": 4, "seed": 12, "shuffle": false})");
    CHECK(parsed.layer_widths == std::vector<std::size_t>{1, 8, 1});
    CHECK(parsed.activation == Activation::tanh);
    CHECK(parsed.epochs == 3);
    CHECK(parsed.learning_rate == 0.5);
    CHECK(parsed.batch_size == 4);
    CHECK(parsed.seed == 12);
    CHECK_FALSE(parsed.shuffle);
    CHECK(parse_train_config("{}").epochs == 200);
    CHECK_THROWS_AS(parse_train_config(R"({"epoch": 3})"), ConfigError);
    CHECK_THROWS_AS(parse_train_config(R"({"epochs": -1})"), ConfigError);
    CHECK_THROWS_AS(parse_train_config(R"({"epochs": "many"})"), ConfigError);
    CHECK_THROWS_AS(parse_train_config(R"({"layer_widths": [1, -4, 1]})"), ConfigError);
    CHECK_THROWS_AS(parse_train_config(R"({"seed": 1.5})"), ConfigError);
    CHECK_THROWS_AS(parse_train_config("{"), ConfigError);

    TrainConfig two_d;
    two_d.layer_widths = {2, 4, 1};
    two_d.epochs = 1;
    CHECK_THROWS_AS(train(two_d, builtin_dataset()), ShapeError);
}
