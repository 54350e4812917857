#include "doctest.h"

#include "nnquad/affine_trace.hpp"
#include "nnquad/errors.hpp"
#include "support/oracles.hpp"

#include <fstream>
#include <sstream>

using namespace nnquad;
using nnquad::testing::hat_network;
using nnquad::testing::random_matrix;
using nnquad::testing::random_relu_net;
using nnquad::testing::random_vector;

namespace {

Vector affine_apply(const AffinePiece& p, const Vector& x) {
    Vector y = matvec(p.alpha, x);
    y += p.beta;
    return y;
}

// Smallest |pre-activation| over every ReLU neuron at x (plain forward recomputation).
double min_margin(const Network& net, const Vector& x) {
    double margin = INFINITY;
    Vector cur = x;
    auto affine = [&](const AffineView& v, Vector in) {
        Vector pre = matvec(v.weight, in);
        for (std::size_t i = 0; i < pre.size(); ++i) {
            pre[i] += v.bias[i];
            if (v.activation == Activation::relu)
                margin = std::min(margin, std::fabs(pre[i]));
            pre[i] = apply_activation(v.activation, pre[i]);
        }
        return pre;
    };
    for (const Layer& l : net.layers()) {
        if (const auto* b = std::get_if<ResidualBlock>(&l)) {
            Vector inner = cur;
            for (const auto& il : b->layers)
                inner = affine(affine_view(il), inner);
            cur += inner;
        } else if (const auto* d = std::get_if<DenseLayer>(&l)) {
            cur = affine(affine_view(*d), cur);
        } else {
            cur = affine(affine_view(std::get<ConvLayer>(l)), cur);
        }
    }
    return margin;
}

Network dense_lowered(const Network& net) {
    auto lower = [](const InnerLayer& l) -> DenseLayer {
        if (const auto* d = std::get_if<DenseLayer>(&l))
            return *d;
        const auto& c = std::get<ConvLayer>(l);
        return DenseLayer{c.lowered_weight(), c.lowered_bias(), c.activation()};
    };
    std::vector<Layer> layers;
    for (const Layer& l : net.layers()) {
        if (const auto* b = std::get_if<ResidualBlock>(&l)) {
            ResidualBlock rb;
            for (const auto& il : b->layers)
                rb.layers.emplace_back(lower(il));
            layers.emplace_back(std::move(rb));
        } else if (const auto* d = std::get_if<DenseLayer>(&l)) {
            layers.emplace_back(*d);
        } else {
            layers.emplace_back(lower(std::get<ConvLayer>(l)));
        }
    }
    return Network(net.input_dim(), std::move(layers));
}

std::string read_file(const std::string& name) {
    std::ifstream in(std::string(NNQUAD_TEST_DATA) + "/" + name);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("hat network pieces") {
    const Network net = hat_network();
    const AffinePiece left = local_affine(net, Vector{0.5});
    CHECK(left.alpha == Matrix::from_rows({{1.0}}));
    CHECK(left.beta == Vector{0.0});
    REQUIRE(left.masks.size() == 1);
    CHECK(left.masks[0] == ActivationMask{true, false});

    const AffinePiece right = local_affine(net, Vector{1.5});
    CHECK(right.alpha == Matrix::from_rows({{0.0}}));
    CHECK(right.beta == Vector{1.0});
    CHECK(right.masks[0] == ActivationMask{true, true});
}

TEST_CASE("exact zero pre-activation counts as inactive") {
    const AffinePiece at_kink = local_affine(hat_network(), Vector{1.0});
    CHECK(at_kink.masks[0] == ActivationMask{true, false});
    CHECK(at_kink.alpha(0, 0) == 1.0);
}

TEST_CASE("zero residual block traces to the identity") {
    ResidualBlock zero;
    zero.layers.emplace_back(DenseLayer{Matrix(4, 3), Vector(4), Activation::relu});
    zero.layers.emplace_back(DenseLayer{Matrix(3, 4), Vector(3), Activation::identity});
    std::vector<Layer> layers;
    layers.emplace_back(zero);
    layers.emplace_back(DenseLayer{Matrix::identity(3), Vector(3), Activation::identity});
    const Network net(3, std::move(layers));
    Rng rng(2);
    for (int i = 0; i < 10; ++i) {
        const AffinePiece p = local_affine(net, random_vector(rng, 3, 5.0));
        CHECK(p.alpha == Matrix::identity(3));
        CHECK(p.beta == Vector(3, 0.0));
    }
}

TEST_CASE("non-relu networks are rejected") {
    std::vector<Layer> layers;
    layers.emplace_back(DenseLayer{Matrix(2, 1, 1.0), Vector(2), Activation::tanh});
    layers.emplace_back(DenseLayer{Matrix(1, 2, 1.0), Vector(1), Activation::identity});
    const Network net(1, std::move(layers));
    CHECK_THROWS_AS(local_affine(net, Vector{0.0}), UnsupportedActivation);
    CHECK_THROWS_AS(local_affine(hat_network(), Vector{0.0, 1.0}), ShapeError);
}

TEST_CASE("batch trace matches single traces") {
    const Network net = hat_network();
    const auto two = local_affine_batch(net, {Vector{0.5}, Vector{1.5}});
    REQUIRE(two.size() == 2);
    CHECK(two[0].alpha == Matrix::from_rows({{1.0}}));
    CHECK(two[1].beta == Vector{1.0});
    CHECK(local_affine_batch(net, {}).empty());

    Rng rng(64);
    const Network big = random_relu_net(rng, 2, 3, 8, 2);
    std::vector<Vector> xs;
    for (int i = 0; i < 64; ++i)
        xs.push_back(random_vector(rng, 2, 3.0));
    const auto batch = local_affine_batch(big, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const AffinePiece single = local_affine(big, xs[i]);
        CHECK(batch[i].alpha == single.alpha);
        CHECK(batch[i].beta == single.beta);
        CHECK(batch[i].masks == single.masks);
    }
}

TEST_CASE("pointwise identity, Jacobian and mask stability on random nets") {
    Rng rng(2024);
    int jacobian_checks = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t in = 1 + rng.below(4);
        const Network net = random_relu_net(rng, in, 1 + rng.below(4), 16, 1 + rng.below(3));
        const Vector x = random_vector(rng, in, 3.0);
        const AffinePiece p = local_affine(net, x);
        const Vector y = forward(net, x);
        const Vector ay = affine_apply(p, x);
        for (std::size_t r = 0; r < y.size(); ++r)
            REQUIRE(std::fabs(y[r] - ay[r]) <= 1e-10);

        if (min_margin(net, x) <= 1e-6)
            continue;  // too close to a breakpoint for finite differences
        ++jacobian_checks;
        constexpr double h = 1e-6;
        for (std::size_t k = 0; k < in; ++k) {
            Vector up = x, down = x;
            up[k] += h;
            down[k] -= h;
            const Vector fu = forward(net, up), fd = forward(net, down);
            for (std::size_t r = 0; r < fu.size(); ++r)
                CHECK(std::fabs((fu[r] - fd[r]) / (2 * h) - p.alpha(r, k)) <= 1e-5);
        }
        Vector nudged = x;
        for (double& v : nudged)
            v += rng.uniform(-1e-8, 1e-8) / std::sqrt(static_cast<double>(in));
        CHECK(local_affine(net, nudged).masks == p.masks);
    }
    CHECK(jacobian_checks > 500);
}

TEST_CASE("conv layers trace exactly like their dense lowering") {
    const Network net = load_network(read_file("conv_residual.json"));
    const Network dense = dense_lowered(net);
    Rng rng(6);
    for (int i = 0; i < 50; ++i) {
        const Vector x = random_vector(rng, 9, 2.0);
        const AffinePiece a = local_affine(net, x);
        const AffinePiece b = local_affine(dense, x);
        CHECK(a.alpha == b.alpha);
        CHECK(a.beta == b.beta);
        CHECK(a.masks == b.masks);
        const Vector y = forward(net, x);
        CHECK(std::fabs(y[0] - affine_apply(a, x)[0]) <= 1e-10);
    }
}
