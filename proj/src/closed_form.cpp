#include "nnquad/closed_form.hpp"

#include "nnquad/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace nnquad {

unsigned max_antiderivative_order(Activation act) noexcept {
    switch (act) {
    case Activation::relu:
    case Activation::identity: return kUnboundedOrder;
    case Activation::tanh:
    case Activation::sigmoid: return 1;
    }
    return 0;
}

namespace {

// t^(k+1) / (k+1)!, built incrementally to stay finite for large k.
double power_over_factorial(double t, unsigned order) {
    double v = 1.0;
    for (unsigned i = 1; i <= order + 1; ++i)
        v *= t / static_cast<double>(i);
    return v;
}

double log_cosh(double t) {
    const double a = std::fabs(t);
    return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::fabs(t))); }

}  // namespace

double antiderivative(Activation act, unsigned order, double t) {
    if (order > max_antiderivative_order(act))
        throw UnsupportedOrder("no closed-form antiderivative of order " + std::to_string(order) +
                               " for " + std::string(to_string(act)));
    if (order == 0)
        return apply_activation(act, t);
    switch (act) {
    case Activation::relu: return t > 0.0 ? power_over_factorial(t, order) : 0.0;
    case Activation::identity: return power_over_factorial(t, order);
    case Activation::tanh: return log_cosh(t);
    case Activation::sigmoid: return softplus(t);
    }
    return 0.0;
}

double Box::volume() const noexcept {
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i)
        v *= hi[i] - lo[i];
    return v;
}

void Box::validate() const {
    if (lo.empty() || lo.size() != hi.size())
        throw ValidationError("box needs matching, non-empty lower and upper bounds");
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]))
            throw ValidationError("box bound " + std::to_string(i) + " is not finite");
        if (lo[i] > hi[i])
            throw ValidationError("box dimension " + std::to_string(i) + " has lower bound above upper bound");
    }
}

namespace {

struct OneLayer {
    const DenseLayer& hidden;
    const DenseLayer& output;
};

OneLayer one_layer(const Network& net) {
    const auto& layers = net.layers();
    if (layers.size() != 2 || !std::holds_alternative<DenseLayer>(layers[0]) ||
        !std::holds_alternative<DenseLayer>(layers[1]))
        throw StructuralError("closed-form integration needs exactly one dense hidden layer "
                              "followed by the dense output layer");
    return {std::get<DenseLayer>(layers[0]), std::get<DenseLayer>(layers[1])};
}

// Combines neuron integrals z with the output layer: W2 z + b2 * measure.
Vector combine(const DenseLayer& output, const Vector& z, double measure) {
    Vector out = matvec(output.weight, z);
    for (std::size_t r = 0; r < out.size(); ++r)
        out[r] += output.bias[r] * measure;
    return out;
}

}  // namespace

Vector integrate_one_layer_interval(const Network& net, double a, double x) {
    const OneLayer nn = one_layer(net);
    if (net.input_dim() != 1)
        throw StructuralError("interval integration needs a scalar-input network, got input_dim " +
                              std::to_string(net.input_dim()));
    const Activation act = nn.hidden.activation;
    if (max_antiderivative_order(act) < 1)
        throw UnsupportedOrder("activation has no first antiderivative");

    Vector z(nn.hidden.weight.rows());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double w = nn.hidden.weight(i, 0);
        const double b = nn.hidden.bias[i];
        if (w != 0.0)
            z[i] = (antiderivative(act, 1, w * x + b) - antiderivative(act, 1, w * a + b)) / w;
        else
            z[i] = apply_activation(act, b) * (x - a);
    }
    return combine(nn.output, z, x - a);
}

namespace {

// c * sigma^(order)(offset + sum_k w_k x_k) over the coordinates not yet integrated.
struct Term {
    double coeff;
    double offset;
    unsigned order;
};

double integrate_neuron(Activation act, std::span<const double> weights, double bias,
                        const Box& box, const std::vector<std::size_t>& order) {
    std::vector<Term> terms{{1.0, bias, 0}};
    std::vector<Term> next;
    for (std::size_t dim : order) {
        const double w = weights[dim];
        const double lo = box.lo[dim];
        const double hi = box.hi[dim];
        next.clear();
        next.reserve(terms.size() * 2);
        for (const Term& t : terms) {
            if (w != 0.0) {
                next.push_back({t.coeff / w, t.offset + w * hi, t.order + 1});
                next.push_back({-t.coeff / w, t.offset + w * lo, t.order + 1});
            } else {
                next.push_back({t.coeff * (hi - lo), t.offset, t.order});
            }
        }
        terms.swap(next);
    }
    double sum = 0.0;
    for (const Term& t : terms)
        sum += t.coeff * antiderivative(act, t.order, t.offset);
    return sum;
}

}  // namespace

Vector integrate_one_layer_box(const Network& net, const Box& box) {
    std::vector<std::size_t> order(box.dim());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    return integrate_one_layer_box(net, box, order);
}

Vector integrate_one_layer_box(const Network& net, const Box& box,
                               const std::vector<std::size_t>& order) {
    const OneLayer nn = one_layer(net);
    box.validate();
    const std::size_t n = box.dim();
    if (n != net.input_dim())
        throw ShapeError("box has dimension " + std::to_string(n) + ", network input_dim is " +
                         std::to_string(net.input_dim()));
    if (n > kMaxBoxDimension)
        throw StructuralError("box dimension " + std::to_string(n) + " exceeds the limit of " +
                              std::to_string(kMaxBoxDimension));
    std::vector<bool> seen(n, false);
    if (order.size() != n)
        throw ValidationError("integration order must list every dimension once");
    for (std::size_t d : order) {
        if (d >= n || seen[d])
            throw ValidationError("integration order must be a permutation of 0.." +
                                  std::to_string(n - 1));
        seen[d] = true;
    }
    const Activation act = nn.hidden.activation;
    if (max_antiderivative_order(act) < n)
        throw UnsupportedOrder(std::string(to_string(act)) + " has no closed-form antiderivative of order " +
                               std::to_string(n) + " needed for a " + std::to_string(n) +
                               "-dimensional box");

    const double volume = box.volume();
    if (volume == 0.0)
        return Vector(net.output_dim(), 0.0);

    Vector z(nn.hidden.weight.rows());
    for (std::size_t i = 0; i < z.size(); ++i)
        z[i] = integrate_neuron(act, nn.hidden.weight.row(i), nn.hidden.bias[i], box, order);
    return combine(nn.output, z, volume);
}

}  // namespace nnquad
