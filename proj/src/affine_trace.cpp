#include "nnquad/affine_trace.hpp"

#include "nnquad/errors.hpp"

#include <string>

namespace nnquad {

namespace {

struct TraceState {
    Vector value;  // current activations at the trace point
    Matrix alpha;
    Vector beta;
    std::vector<ActivationMask> masks;
};

void step(TraceState& s, const AffineView& layer) {
    Vector pre = matvec(layer.weight, s.value);
    s.alpha = matmul(layer.weight, s.alpha);
    s.beta = matvec(layer.weight, s.beta);
    for (std::size_t i = 0; i < pre.size(); ++i) {
        pre[i] += layer.bias[i];
        s.beta[i] += layer.bias[i];
    }
    if (layer.activation == Activation::identity) {
        s.value = std::move(pre);
        return;
    }
    ActivationMask mask(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) {
        mask[i] = pre[i] > 0.0;
        if (!mask[i]) {
            pre[i] = 0.0;
            s.beta[i] = 0.0;
            for (double& a : s.alpha.row(i))
                a = 0.0;
        }
    }
    s.value = std::move(pre);
    s.masks.push_back(std::move(mask));
}

}  // namespace

AffinePiece local_affine(const Network& net, const Vector& x) {
    require_relu(net);
    if (x.size() != net.input_dim())
        throw ShapeError("local_affine: input has length " + std::to_string(x.size()) +
                         ", network expects " + std::to_string(net.input_dim()));

    TraceState s{x, Matrix::identity(net.input_dim()), Vector(net.input_dim()), {}};
    for (const Layer& layer : net.layers()) {
        if (const auto* block = std::get_if<ResidualBlock>(&layer)) {
            // The inner block is traced from the incoming pair, then the skip path is added.
            const Vector skip_value = s.value;
            const Matrix skip_alpha = s.alpha;
            const Vector skip_beta = s.beta;
            for (const auto& inner : block->layers)
                step(s, affine_view(inner));
            s.value += skip_value;
            s.alpha += skip_alpha;
            s.beta += skip_beta;
        } else if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
            step(s, affine_view(*dense));
        } else {
            step(s, affine_view(std::get<ConvLayer>(layer)));
        }
    }
    return {std::move(s.alpha), std::move(s.beta), std::move(s.masks)};
}

std::vector<AffinePiece> local_affine_batch(const Network& net, const std::vector<Vector>& xs) {
    std::vector<AffinePiece> out;
    out.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        try {
            out.push_back(local_affine(net, xs[i]));
        } catch (const ShapeError& e) {
            throw ShapeError("batch item " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace nnquad
