#include "nnquad/trainer.hpp"

#include "nnquad/errors.hpp"
#include "nnquad/random.hpp"

#include "json.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace nnquad {

void TrainConfig::validate() const {
    if (layer_widths.size() < 2)
        throw ConfigError("layer_widths needs at least an input and an output width");
    for (std::size_t w : layer_widths)
        if (w == 0)
            throw ConfigError("layer widths must be >= 1");
    if (activation != Activation::relu && activation != Activation::tanh)
        throw ConfigError("trainer activation must be relu or tanh");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning_rate must be a positive number");
    if (batch_size == 0)
        throw ConfigError("batch_size must be >= 1");
}

namespace {

// json::get<std::size_t> wraps negative numbers instead of rejecting them.
template <class T>
T count_field(const nlohmann::json& value, const std::string& key) {
    if (!value.is_number_unsigned())
        throw ConfigError("train config: '" + key + "' must be a non-negative integer");
    return value.get<T>();
}

}  // namespace

TrainConfig parse_train_config(std::string_view json_text) {
    using json = nlohmann::json;
    json j;
    try {
        j = json::parse(json_text.begin(), json_text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("train config: ") + e.what());
    }
    if (!j.is_object())
        throw ConfigError("train config must be a JSON object");
    TrainConfig cfg;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "layer_widths") {
                if (!value.is_array())
                    throw ConfigError("train config: 'layer_widths' must be an array");
                cfg.layer_widths.clear();
                for (const auto& w : value)
                    cfg.layer_widths.push_back(count_field<std::size_t>(w, key));
            }
            else if (key == "activation")
                cfg.activation = parse_activation(value.get<std::string>());
            else if (key == "epochs")
                cfg.epochs = count_field<std::size_t>(value, key);
            else if (key == "learning_rate")
                cfg.learning_rate = value.get<double>();
            else if (key == "batch_size")
                cfg.batch_size = count_field<std::size_t>(value, key);
            else if (key == "seed")
                cfg.seed = count_field<std::uint64_t>(value, key);
            else if (key == "shuffle")
                cfg.shuffle = value.get<bool>();
            else
                throw ConfigError("train config: unknown field '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("train config: ") + e.what());
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("train config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

void Dataset::validate() const {
    if (inputs.empty())
        throw ValidationError("dataset is empty");
    if (inputs.size() != targets.size())
        throw ValidationError("dataset has " + std::to_string(inputs.size()) + " inputs but " +
                              std::to_string(targets.size()) + " targets");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].size() != inputs[0].size() || targets[i].size() != targets[0].size() ||
            inputs[i].empty() || targets[i].empty())
            throw ValidationError("dataset sample " + std::to_string(i) + " has inconsistent shape");
    }
}

double mse_loss(const std::vector<Vector>& pred, const std::vector<Vector>& target) {
    if (pred.size() != target.size())
        throw ShapeError("mse_loss: " + std::to_string(pred.size()) + " predictions vs " +
                         std::to_string(target.size()) + " targets");
    if (pred.empty())
        throw ShapeError("mse_loss: no samples");
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i].size() != target[i].size() || pred[i].empty())
            throw ShapeError("mse_loss: sample " + std::to_string(i) + " shape mismatch");
        double sq = 0.0;
        for (std::size_t r = 0; r < pred[i].size(); ++r) {
            const double d = pred[i][r] - target[i][r];
            sq += d * d;
        }
        total += sq / static_cast<double>(pred[i].size());
    }
    return total / static_cast<double>(pred.size());
}

namespace {

// Mutable dense parameters for training.
struct Params {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
    std::vector<Activation> activations;

    std::size_t depth() const { return weights.size(); }
};

Params params_of(const Network& net) {
    Params p;
    for (const Layer& layer : net.layers()) {
        const auto* dense = std::get_if<DenseLayer>(&layer);
        if (!dense)
            throw StructuralError("training and gradient checks support dense layers only");
        p.weights.push_back(dense->weight);
        p.biases.push_back(dense->bias);
        p.activations.push_back(dense->activation);
    }
    return p;
}

Network network_of(const Params& p, std::size_t input_dim) {
    std::vector<Layer> layers;
    for (std::size_t l = 0; l < p.depth(); ++l)
        layers.emplace_back(DenseLayer{p.weights[l], p.biases[l], p.activations[l]});
    return Network(input_dim, std::move(layers));
}

double activation_slope(Activation act, double pre, double post) {
    switch (act) {
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - post * post;
    case Activation::sigmoid: return post * (1.0 - post);
    case Activation::identity: return 1.0;
    }
    return 1.0;
}

// Accumulates d(loss)/d(params) for one sample into grad_w/grad_b, with `scale`
// multiplying the derivative of the squared error.
void backprop_sample(const Params& p, const Vector& x, const Vector& y, double scale,
                     std::vector<Matrix>& grad_w, std::vector<Vector>& grad_b) {
    const std::size_t depth = p.depth();
    std::vector<Vector> acts{x};
    std::vector<Vector> pres;
    for (std::size_t l = 0; l < depth; ++l) {
        Vector pre = matvec(p.weights[l], acts.back());
        Vector post(pre.size());
        for (std::size_t i = 0; i < pre.size(); ++i) {
            pre[i] += p.biases[l][i];
            post[i] = apply_activation(p.activations[l], pre[i]);
        }
        pres.push_back(std::move(pre));
        acts.push_back(std::move(post));
    }
    Vector delta(acts.back().size());
    for (std::size_t r = 0; r < delta.size(); ++r)
        delta[r] = scale * 2.0 * (acts.back()[r] - y[r]);

    for (std::size_t l = depth; l-- > 0;) {
        for (std::size_t i = 0; i < delta.size(); ++i)
            delta[i] *= activation_slope(p.activations[l], pres[l][i], acts[l + 1][i]);
        const Vector& in = acts[l];
        for (std::size_t i = 0; i < delta.size(); ++i) {
            grad_b[l][i] += delta[i];
            auto row = grad_w[l].row(i);
            for (std::size_t k = 0; k < in.size(); ++k)
                row[k] += delta[i] * in[k];
        }
        if (l == 0)
            break;
        Vector next(in.size());
        for (std::size_t i = 0; i < delta.size(); ++i) {
            const auto w = p.weights[l].row(i);
            for (std::size_t k = 0; k < w.size(); ++k)
                next[k] += w[k] * delta[i];
        }
        delta = std::move(next);
    }
}

struct Gradient {
    std::vector<Matrix> w;
    std::vector<Vector> b;
};

Gradient zero_gradient(const Params& p) {
    Gradient g;
    for (std::size_t l = 0; l < p.depth(); ++l) {
        g.w.emplace_back(p.weights[l].rows(), p.weights[l].cols());
        g.b.emplace_back(p.biases[l].size());
    }
    return g;
}

Gradient batch_gradient(const Params& p, const Dataset& data,
                        std::span<const std::size_t> indices) {
    Gradient g = zero_gradient(p);
    const double out_dim = static_cast<double>(data.targets[0].size());
    const double scale = 1.0 / (out_dim * static_cast<double>(indices.size()));
    for (std::size_t idx : indices)
        backprop_sample(p, data.inputs[idx], data.targets[idx], scale, g.w, g.b);
    return g;
}

double dataset_loss(const Network& net, const Dataset& data) {
    return mse_loss(forward_batch(net, data.inputs), data.targets);
}

void check_data(const Network& net, const Dataset& data) {
    data.validate();
    if (data.inputs[0].size() != net.input_dim() || data.targets[0].size() != net.output_dim())
        throw ShapeError("dataset shape (" + std::to_string(data.inputs[0].size()) + " -> " +
                         std::to_string(data.targets[0].size()) + ") does not match network (" +
                         std::to_string(net.input_dim()) + " -> " +
                         std::to_string(net.output_dim()) + ")");
}

}  // namespace

Network initialize_network(const TrainConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    std::vector<Layer> layers;
    const auto& widths = cfg.layer_widths;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t fan_in = widths[l];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Matrix w(widths[l + 1], fan_in);
        for (std::size_t r = 0; r < w.rows(); ++r)
            for (double& v : w.row(r))
                v = rng.uniform(-bound, bound);
        Vector b(widths[l + 1]);
        for (double& v : b)
            v = rng.uniform(-bound, bound);
        const bool last = l + 2 == widths.size();
        layers.emplace_back(
            DenseLayer{std::move(w), std::move(b), last ? Activation::identity : cfg.activation});
    }
    return Network(widths.front(), std::move(layers));
}

TrainResult train(const TrainConfig& cfg, const Dataset& data) {
    Network net = initialize_network(cfg);
    check_data(net, data);

    // A second stream, so the initialization does not depend on the epoch count.
    Rng shuffle_rng(cfg.seed ^ 0x5eed5eed5eed5eedULL);
    Params p = params_of(net);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result{net, {dataset_loss(net, data)}};
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (cfg.shuffle) {
            for (std::size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        }
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - start);
            const Gradient g = batch_gradient(p, data, std::span(order).subspan(start, len));
            for (std::size_t l = 0; l < p.depth(); ++l) {
                for (std::size_t r = 0; r < p.weights[l].rows(); ++r) {
                    auto w = p.weights[l].row(r);
                    const auto gw = g.w[l].row(r);
                    for (std::size_t c = 0; c < w.size(); ++c)
                        w[c] -= cfg.learning_rate * gw[c];
                }
                for (std::size_t i = 0; i < p.biases[l].size(); ++i)
                    p.biases[l][i] -= cfg.learning_rate * g.b[l][i];
            }
        }
        bool finite = true;
        for (std::size_t l = 0; l < p.depth(); ++l)
            finite = finite && p.weights[l].all_finite() && p.biases[l].all_finite();
        if (!finite)
            throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch), epoch);
        result.network = network_of(p, net.input_dim());
        const double loss = dataset_loss(result.network, data);
        if (!std::isfinite(loss))
            throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch), epoch);
        result.losses.push_back(loss);
    }
    return result;
}

std::vector<double> loss_gradient(const Network& net, const Dataset& data) {
    check_data(net, data);
    const Params p = params_of(net);
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const Gradient g = batch_gradient(p, data, all);
    std::vector<double> flat;
    for (std::size_t l = 0; l < p.depth(); ++l) {
        flat.insert(flat.end(), g.w[l].data().begin(), g.w[l].data().end());
        flat.insert(flat.end(), g.b[l].begin(), g.b[l].end());
    }
    return flat;
}

double gradient_check(const Network& net, const Dataset& data) {
    const std::vector<double> analytic = loss_gradient(net, data);
    Params p = params_of(net);
    constexpr double step = 1e-6;
    auto loss_with = [&](const Params& q) { return dataset_loss(network_of(q, net.input_dim()), data); };

    double worst = 0.0;
    std::size_t idx = 0;
    auto probe = [&](double& param) {
        const double saved = param;
        param = saved + step;
        const double up = loss_with(p);
        param = saved - step;
        const double down = loss_with(p);
        param = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double g = analytic[idx++];
        const double denom = std::max({1.0, std::fabs(g), std::fabs(numeric)});
        worst = std::max(worst, std::fabs(g - numeric) / denom);
    };
    for (std::size_t l = 0; l < p.depth(); ++l) {
        for (std::size_t r = 0; r < p.weights[l].rows(); ++r)
            for (double& w : p.weights[l].row(r))
                probe(w);
        for (double& b : p.biases[l])
            probe(b);
    }
    return worst;
}

}  // namespace nnquad
