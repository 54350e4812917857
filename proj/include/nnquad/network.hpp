#pragma once

#include "nnquad/numerics.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace nnquad {

enum class Activation { relu, tanh, sigmoid, identity };

std::string_view to_string(Activation act);
// Throws ValidationError on an unknown tag.
Activation parse_activation(std::string_view tag);
double apply_activation(Activation act, double y);

struct DenseLayer {
    Matrix weight;
    Vector bias;
    Activation activation = Activation::identity;
};

// Single-channel stride/zero-padding convolution. The dense lowering is computed once
// at construction so tracing and evaluation share it.
class ConvLayer {
public:
    ConvLayer(Matrix kernel, Vector bias, ConvShape input_shape, std::size_t stride,
              std::size_t padding, Activation activation);

    const Matrix& kernel() const noexcept { return kernel_; }
    const Vector& bias() const noexcept { return bias_; }
    const ConvShape& input_shape() const noexcept { return input_shape_; }
    const ConvShape& output_shape() const noexcept { return lowered_.output_shape; }
    std::size_t stride() const noexcept { return stride_; }
    std::size_t padding() const noexcept { return padding_; }
    Activation activation() const noexcept { return activation_; }

    const Matrix& lowered_weight() const noexcept { return lowered_.weight; }
    const Vector& lowered_bias() const noexcept { return lowered_.bias; }
    std::size_t input_size() const noexcept { return lowered_.weight.cols(); }
    std::size_t output_size() const noexcept { return lowered_.weight.rows(); }

private:
    Matrix kernel_;
    Vector bias_;
    ConvShape input_shape_;
    std::size_t stride_;
    std::size_t padding_;
    Activation activation_;
    LoweredConv lowered_;
};

using InnerLayer = std::variant<DenseLayer, ConvLayer>;

// x + inner(x). Inner layers are dense or conv only; one level of nesting.
struct ResidualBlock {
    std::vector<InnerLayer> layers;
};

using Layer = std::variant<DenseLayer, ConvLayer, ResidualBlock>;

// Affine view of a dense or conv layer.
struct AffineView {
    const Matrix& weight;
    const Vector& bias;
    Activation activation;
};
AffineView affine_view(const InnerLayer& layer);
AffineView affine_view(const DenseLayer& layer);
AffineView affine_view(const ConvLayer& layer);

// Validated, immutable feed-forward network. The last layer is dense with identity
// activation; hidden activations are relu, tanh or sigmoid, except that the last layer
// inside a residual block may be identity.
class Network {
public:
    Network(std::size_t input_dim, std::vector<Layer> layers);

    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t output_dim() const noexcept { return output_dim_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }

    // True when every nonlinear activation is relu, i.e. the network is piecewise linear.
    bool is_relu() const noexcept;
    std::size_t parameter_count() const noexcept;

private:
    std::size_t input_dim_;
    std::size_t output_dim_;
    std::vector<Layer> layers_;
};

// Throws UnsupportedActivation unless net.is_relu().
void require_relu(const Network& net);

Vector forward(const Network& net, const Vector& x);
std::vector<Vector> forward_batch(const Network& net, const std::vector<Vector>& xs);

// Weight-file JSON (format_version 1).
Network load_network(std::string_view text);
std::string save_network(const Network& net);

Network load_network_file(const std::string& path);
void save_network_file(const Network& net, const std::string& path);

}  // namespace nnquad
