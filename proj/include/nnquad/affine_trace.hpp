#pragma once

#include "nnquad/network.hpp"
#include "nnquad/numerics.hpp"

#include <vector>

namespace nnquad {

// Activity pattern of one ReLU layer: true where the pre-activation is strictly positive.
using ActivationMask = std::vector<bool>;

// Local affine form of a ReLU network: on the linear region containing the trace point,
// net(x) == alpha * x + beta.
struct AffinePiece {
    Matrix alpha;  // output_dim x input_dim
    Vector beta;   // output_dim
    // One entry per ReLU layer in evaluation order, residual interiors included.
    std::vector<ActivationMask> masks;
};

// Forward propagation of (alpha, beta) through the network, starting from the identity
// map. Exactly-zero pre-activations count as inactive, so at a breakpoint the returned
// piece is the one to its right for increasing pre-activation.
// Throws UnsupportedActivation for tanh/sigmoid hidden layers and ShapeError on a
// wrong-length input.
AffinePiece local_affine(const Network& net, const Vector& x);

std::vector<AffinePiece> local_affine_batch(const Network& net, const std::vector<Vector>& xs);

}  // namespace nnquad
