#pragma once

#include "nnquad/affine_trace.hpp"
#include "nnquad/network.hpp"
#include "nnquad/numerics.hpp"

#include <cstddef>
#include <vector>

namespace nnquad {

// Line through `base` along coordinate `coord`, restricted to [lo, hi]. The other
// coordinates stay at their base values.
struct LineSegment {
    Vector base;
    std::size_t coord = 0;
    double lo = 0.0;
    double hi = 0.0;

    // Segment along the only coordinate of a scalar-input network.
    static LineSegment scalar(double lo, double hi) { return {Vector{lo}, 0, lo, hi}; }
};

// Where each subinterval's affine piece is traced: at its left end (the classical
// corrector) or at its midpoint, which stays correct when a partition point sits
// exactly on a breakpoint.
enum class Representative { left, midpoint };

class Partition {
public:
    // Throws ValidationError unless there are >= 2 finite, strictly increasing points.
    explicit Partition(std::vector<double> points, Representative mode = Representative::midpoint);

    // n points evenly spaced over [lo, hi], endpoints exact.
    static Partition uniform(double lo, double hi, std::size_t n,
                             Representative mode = Representative::midpoint);

    const std::vector<double>& points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }
    Representative mode() const noexcept { return mode_; }

private:
    std::vector<double> points_;
    Representative mode_;
};

// The running-constant recursion of the corrector. On subinterval [z_i, z_{i+1}] the
// estimate is F(x) = Poly_i(x) + constants[i]; samples[i] is F at z_i.
struct CorrectedIntegral {
    Vector total;                  // per output component, equals samples.back()
    std::vector<Vector> constants; // one per partition point
    std::vector<Vector> samples;   // one per partition point, samples.front() == 0
};

// Antiderivative of x -> alpha x + beta along coordinate j with zero constant:
// 0.5 alpha[r][j] x_j^2 + (sum_{k != j} alpha[r][k] x_k + beta[r]) x_j.
Vector poly_eval(const AffinePiece& piece, std::size_t coord, const Vector& x);

CorrectedIntegral corrected_integral(const Network& net, const LineSegment& seg,
                                     const Partition& part);

struct CurvePoint {
    double z;
    Vector value;
};

std::vector<CurvePoint> antiderivative_curve(const Network& net, const LineSegment& seg,
                                             const Partition& part);

// Cap on the number of linear pieces the breakpoint search will hold.
constexpr std::size_t kMaxPieces = 100000;

// Every point in (a, b) where some neuron's pre-activation changes sign, for a
// scalar-input ReLU network. Sorted, duplicates within 1e-12 merged.
std::vector<double> breakpoints_1d(const Network& net, double a, double b);

// Corrected integral over {a} + breakpoints + {b}; exact up to rounding.
Vector exact_integral_1d(const Network& net, double a, double b);

}  // namespace nnquad
