#include "doctest.h"

#include "nnquad/baselines.hpp"
#include "nnquad/closed_form.hpp"
#include "nnquad/errors.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <numeric>

using namespace nnquad;
using nnquad::testing::random_matrix;
using nnquad::testing::random_vector;
using nnquad::testing::tensor_grid_one_layer;

namespace {

Network one_layer(const Matrix& w1, const Vector& b1, const Matrix& w2, const Vector& b2,
                  Activation act) {
    std::vector<Layer> layers;
    layers.emplace_back(DenseLayer{w1, b1, act});
    layers.emplace_back(DenseLayer{w2, b2, Activation::identity});
    return Network(w1.cols(), std::move(layers));
}

Network random_one_layer(Rng& rng, std::size_t in, std::size_t width, Activation act) {
    return one_layer(random_matrix(rng, width, in, 2.0), random_vector(rng, width, 2.0),
                     random_matrix(rng, 1, width, 2.0), random_vector(rng, 1, 2.0), act);
}

double eval1(const Network& net, double x) { return forward(net, Vector{x})[0]; }

}  // namespace

TEST_CASE("antiderivative table values") {
    CHECK(antiderivative(Activation::relu, 1, 2.0) == 2.0);
    CHECK(antiderivative(Activation::tanh, 1, 0.0) == 0.0);
    CHECK(antiderivative(Activation::relu, 2, 3.0) == doctest::Approx(4.5).epsilon(1e-15));
    CHECK(antiderivative(Activation::relu, 3, -1.0) == 0.0);
    CHECK(antiderivative(Activation::identity, 1, 3.0) == 4.5);
    CHECK(antiderivative(Activation::sigmoid, 1, 0.0) == doctest::Approx(std::log(2.0)));
    CHECK(antiderivative(Activation::tanh, 0, 0.3) == std::tanh(0.3));
}

TEST_CASE("relu order 2 equals the integral of order 1") {
    const auto q = reference_quadrature([](double t) { return antiderivative(Activation::relu, 1, t); },
                                        -1.0, 3.0, 1e-12);
    CHECK(q.estimate == doctest::Approx(antiderivative(Activation::relu, 2, 3.0)).epsilon(1e-11));
}

TEST_CASE("softplus and ln cosh stay finite far out") {
    CHECK(antiderivative(Activation::sigmoid, 1, 800.0) == doctest::Approx(800.0));
    CHECK(antiderivative(Activation::sigmoid, 1, -800.0) == 0.0);
    CHECK(antiderivative(Activation::tanh, 1, 800.0) == doctest::Approx(800.0 - std::log(2.0)));
    CHECK(antiderivative(Activation::tanh, 1, -800.0) == doctest::Approx(800.0 - std::log(2.0)));
}

TEST_CASE("orders beyond the table are rejected") {
    CHECK(max_antiderivative_order(Activation::tanh) == 1);
    CHECK(max_antiderivative_order(Activation::relu) == kUnboundedOrder);
    CHECK_THROWS_AS(antiderivative(Activation::tanh, 2, 0.0), UnsupportedOrder);
    CHECK_THROWS_AS(antiderivative(Activation::sigmoid, 2, 0.0), UnsupportedOrder);
}

TEST_CASE("antiderivatives differentiate to the previous order") {
    Rng rng(4);
    struct Case {
        Activation act;
        unsigned max_order;
    };
    for (const Case c : {Case{Activation::relu, 4}, Case{Activation::identity, 4},
                         Case{Activation::tanh, 1}, Case{Activation::sigmoid, 1}}) {
        for (unsigned k = 1; k <= c.max_order; ++k) {
            for (int i = 0; i < 100; ++i) {
                const double t = rng.uniform(-5, 5);
                constexpr double h = 1e-5;
                const double fd =
                    (antiderivative(c.act, k, t + h) - antiderivative(c.act, k, t - h)) / (2 * h);
                CHECK(std::fabs(fd - antiderivative(c.act, k - 1, t)) <= 1e-6);
            }
        }
    }
}

TEST_CASE("one-layer interval examples") {
    const Matrix one = Matrix::from_rows({{1.0}});
    const Network relu = one_layer(one, Vector{0.0}, one, Vector{0.0}, Activation::relu);
    CHECK(integrate_one_layer_interval(relu, 0.0, 2.0)[0] == 2.0);

    const Network tanh = one_layer(one, Vector{0.0}, one, Vector{0.0}, Activation::tanh);
    const double closed = integrate_one_layer_interval(tanh, 0.0, 5.0)[0];
    const double quad = reference_quadrature([](double t) { return std::tanh(t); }, 0.0, 5.0, 1e-12).estimate;
    CHECK(closed == doctest::Approx(4.3068982).epsilon(1e-7));
    CHECK(std::fabs(closed - quad) <= 1e-10);

    // Zero hidden weights: constant integrand.
    const double c = 1.75, a = -0.5, x = 2.0;
    const Network flat = one_layer(Matrix(3, 1), Vector{0.2, -1.0, 0.7}, Matrix::from_rows({{1.0, 2.0, -3.0}}),
                                   Vector{c}, Activation::sigmoid);
    const double sig = apply_activation(Activation::sigmoid, 0.2) + 2.0 * apply_activation(Activation::sigmoid, -1.0) -
                       3.0 * apply_activation(Activation::sigmoid, 0.7);
    CHECK(integrate_one_layer_interval(flat, a, x)[0] == doctest::Approx(c * (x - a) + sig * (x - a)).epsilon(1e-14));
}

TEST_CASE("one-layer structural errors") {
    const Matrix one = Matrix::from_rows({{1.0}});
    std::vector<Layer> deep;
    deep.emplace_back(DenseLayer{one, Vector{0.0}, Activation::relu});
    deep.emplace_back(DenseLayer{one, Vector{0.0}, Activation::relu});
    deep.emplace_back(DenseLayer{one, Vector{0.0}, Activation::identity});
    CHECK_THROWS_AS(integrate_one_layer_interval(Network(1, std::move(deep)), 0.0, 1.0), StructuralError);

    const Network two_in = one_layer(Matrix(2, 2, 1.0), Vector(2), Matrix(1, 2, 1.0), Vector(1), Activation::relu);
    CHECK_THROWS_AS(integrate_one_layer_interval(two_in, 0.0, 1.0), StructuralError);

    const Network tanh2 = one_layer(Matrix(2, 2, 1.0), Vector(2), Matrix(1, 2, 1.0), Vector(1), Activation::tanh);
    CHECK_THROWS_AS(integrate_one_layer_box(tanh2, Box{{0, 0}, {1, 1}}), UnsupportedOrder);
}

TEST_CASE("closed form matches adaptive quadrature on random one-layer nets") {
    Rng rng(50);
    for (Activation act : {Activation::relu, Activation::tanh, Activation::sigmoid}) {
        for (int trial = 0; trial < 50; ++trial) {
            const Network net = random_one_layer(rng, 1, 1 + rng.below(32), act);
            double a = rng.uniform(-5, 5), b = rng.uniform(-5, 5);
            if (a > b)
                std::swap(a, b);
            const double closed = integrate_one_layer_interval(net, a, b)[0];
            const double quad = reference_quadrature([&](double t) { return eval1(net, t); }, a, b, 1e-11).estimate;
            CHECK(std::fabs(closed - quad) <= 1e-8);
        }
    }
}

TEST_CASE("interval additivity") {
    Rng rng(51);
    for (int trial = 0; trial < 50; ++trial) {
        const Activation act = trial % 2 ? Activation::relu : Activation::tanh;
        const Network net = random_one_layer(rng, 1, 1 + rng.below(16), act);
        std::array<double, 3> p{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
        std::sort(p.begin(), p.end());
        const double whole = integrate_one_layer_interval(net, p[0], p[2])[0];
        const double parts = integrate_one_layer_interval(net, p[0], p[1])[0] +
                             integrate_one_layer_interval(net, p[1], p[2])[0];
        CHECK(std::fabs(whole - parts) <= 1e-10);
    }
}

TEST_CASE("box examples") {
    const Vector zero{0.0};
    const Matrix out = Matrix::from_rows({{1.0}});
    const Box unit{{0, 0}, {1, 1}};
    const Network sum = one_layer(Matrix::from_rows({{1, 1}}), zero, out, zero, Activation::relu);
    CHECK(integrate_one_layer_box(sum, unit)[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::fabs(tensor_grid_one_layer(sum, unit, 8) - 1.0) <= 1e-12);

    const Network shifted = one_layer(Matrix::from_rows({{1, 1}}), Vector{-2.0}, out, zero, Activation::relu);
    CHECK(integrate_one_layer_box(shifted, unit)[0] == 0.0);

    const Network diff = one_layer(Matrix::from_rows({{1, -1}}), zero, out, zero, Activation::relu);
    const double tri = integrate_one_layer_box(diff, unit)[0];
    CHECK(tri == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    const auto mc = mc_box_integrate([&](std::span<const double> p) { return std::max(p[0] - p[1], 0.0); },
                                     unit, 200000, 7);
    CHECK(std::fabs(mc.estimate - 1.0 / 6.0) <= 3.0 * mc.standard_error);

    // Degenerate box.
    CHECK(integrate_one_layer_box(sum, Box{{0, 0.5}, {1, 0.5}})[0] == 0.0);
    // One-dimensional boxes take any activation and agree with the interval route.
    const Network tanh = one_layer(Matrix::from_rows({{0.7}}), Vector{0.2}, out, Vector{0.4}, Activation::tanh);
    CHECK(integrate_one_layer_box(tanh, Box{{-1.0}, {2.0}})[0] ==
          doctest::Approx(integrate_one_layer_interval(tanh, -1.0, 2.0)[0]).epsilon(1e-14));
}

TEST_CASE("box integrals are invariant under elimination order") {
    Rng rng(52);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.below(3);
        const Network net = random_one_layer(rng, n, 1 + rng.below(8), Activation::relu);
        Box box;
        for (std::size_t d = 0; d < n; ++d) {
            const double a = rng.uniform(-2, 1);
            box.lo.push_back(a);
            box.hi.push_back(a + rng.uniform(0.2, 2.0));
        }
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        const double ref = integrate_one_layer_box(net, box, order)[0];
        while (std::next_permutation(order.begin(), order.end())) {
            const double v = integrate_one_layer_box(net, box, order)[0];
            CHECK(std::fabs(v - ref) <= 1e-9 * std::max(1.0, std::fabs(ref)));
        }
    }
}

TEST_CASE("box integrals match tensor-grid quadrature") {
    Rng rng(53);
    for (int trial = 0; trial < 6; ++trial) {
        const std::size_t n = 2 + trial % 2;
        const Network net = random_one_layer(rng, n, 1 + rng.below(6), Activation::relu);
        Box box;
        for (std::size_t d = 0; d < n; ++d) {
            box.lo.push_back(rng.uniform(-1.5, 0.0));
            box.hi.push_back(rng.uniform(0.1, 1.5));
        }
        const double closed = integrate_one_layer_box(net, box)[0];
        const double grid = tensor_grid_one_layer(net, box, n == 2 ? 200 : 40);
        CHECK(std::fabs(closed - grid) <= 1e-6);
    }
}

TEST_CASE("box order validation") {
    const Network net = one_layer(Matrix(1, 2, 1.0), Vector(1), Matrix(1, 1, 1.0), Vector(1), Activation::relu);
    const Box box{{0, 0}, {1, 1}};
    CHECK_THROWS_AS(integrate_one_layer_box(net, box, {0, 0}), ValidationError);
    CHECK_THROWS_AS(integrate_one_layer_box(net, Box{{0, 1}, {1, 0}}), ValidationError);
    CHECK_THROWS_AS(integrate_one_layer_box(net, Box{{0}, {1}}), ShapeError);
}
