#pragma once

#include "nnquad/network.hpp"
#include "nnquad/numerics.hpp"

#include <cstddef>
#include <limits>
#include <vector>

namespace nnquad {

constexpr unsigned kUnboundedOrder = std::numeric_limits<unsigned>::max();

// Highest antiderivative order with a closed form: relu and identity have all of them,
// tanh and sigmoid stop at 1.
unsigned max_antiderivative_order(Activation act) noexcept;

// Order-k antiderivative of the activation (order 0 is the activation itself):
//   relu      relu(t)^(k+1) / (k+1)!
//   identity  t^(k+1) / (k+1)!
//   tanh      ln cosh t            (order 1)
//   sigmoid   ln(1 + e^t)          (order 1)
// Constants are chosen so relu and sigmoid vanish as t -> -inf, tanh and identity at 0.
// Throws UnsupportedOrder past max_antiderivative_order.
double antiderivative(Activation act, unsigned order, double t);

// Axis-aligned box [lo_0, hi_0] x ... x [lo_{n-1}, hi_{n-1}].
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t dim() const noexcept { return lo.size(); }
    double volume() const noexcept;
    // Throws ValidationError unless lo.size() == hi.size() >= 1 and lo_i <= hi_i.
    void validate() const;
};

// Largest box dimension accepted by integrate_one_layer_box (2^n terms per neuron).
constexpr std::size_t kMaxBoxDimension = 12;

// Integral of a one-hidden-layer network with scalar input over [a, x], per output
// component: W2 z + b2 (x - a), z_i = integral of sigma(w_i t + b_i).
// Throws StructuralError unless the network is dense -> dense with input_dim 1.
Vector integrate_one_layer_interval(const Network& net, double a, double x);

// Integral of a one-hidden-layer network over a box by iterated antidifferentiation,
// one coordinate at a time. For n >= 2 the hidden activation must be relu or identity.
Vector integrate_one_layer_box(const Network& net, const Box& box);

// Same, eliminating coordinates in the given order (a permutation of 0..n-1).
Vector integrate_one_layer_box(const Network& net, const Box& box,
                               const std::vector<std::size_t>& order);

}  // namespace nnquad
