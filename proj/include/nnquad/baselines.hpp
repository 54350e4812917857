#pragma once

#include "nnquad/closed_form.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace nnquad {

using ScalarFn = std::function<double(double)>;
using FieldFn = std::function<double(std::span<const double>)>;

// Samples (x_i, f(x_i)) with piecewise-linear interpolation between them.
class SampledFunction {
public:
    // Throws ValidationError unless >= 2 samples with strictly increasing abscissae.
    SampledFunction(std::vector<double> xs, std::vector<double> ys);

    // Throws DomainError outside [xs.front(), xs.back()].
    double operator()(double x) const;

    const std::vector<double>& xs() const noexcept { return xs_; }
    const std::vector<double>& ys() const noexcept { return ys_; }

private:
    std::vector<double> xs_;
    std::vector<double> ys_;
};

// Antiderivative estimates F(x_k) with F(x_0) = 0.
struct Curve {
    std::vector<double> x;
    std::vector<double> value;
};

struct QuadratureResult {
    double estimate = 0.0;
    std::size_t evaluations = 0;
    double standard_error = 0.0;  // Monte Carlo only
    double error_estimate = 0.0;  // adaptive only: achieved error bound
};

// Left-endpoint Riemann sums F(a + k h) = h * sum_{i<k} f(a + i h), h = (b - a) / steps.
Curve euler_integrate(const ScalarFn& f, double a, double b, std::size_t steps);
Curve euler_integrate(const SampledFunction& f, double a, double b, std::size_t steps);

struct Rk45Options {
    double rel_tol = 1e-3;
    double abs_tol = 1e-6;
    // Points in [a, b] where the dense output is sampled. Empty: report accepted steps.
    std::vector<double> output_points;
};

struct Rk45Result {
    Curve curve;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
    std::size_t evaluations = 0;
};

// Solves F' = f(t), F(a) = 0 with the Dormand-Prince 5(4) pair, PI step-size control and
// the pair's 4th-order continuous extension for dense output. Throws StiffnessError when
// the step shrinks below 1e-14 (b - a).
Rk45Result rk45_integrate(const ScalarFn& f, double a, double b, const Rk45Options& options);

// Globally adaptive bisection with a 4-point Gauss-Lobatto / 7-point Kronrod pair. Intervals are not split below
// 1e-12 width. Throws ToleranceNotMet, carrying the best estimate, if the summed error
// bound stays above tol.
QuadratureResult reference_quadrature(const ScalarFn& f, double a, double b, double tol);

// Plain Monte Carlo over a box: volume * sample mean, standard error
// volume * s / sqrt(samples). Points come from Rng(seed) (see random.hpp), drawn
// coordinate by coordinate.
QuadratureResult mc_box_integrate(const FieldFn& f, const Box& box, std::size_t samples,
                                  std::uint64_t seed);

}  // namespace nnquad
