#include "nnquad/baselines.hpp"

#include "nnquad/errors.hpp"
#include "nnquad/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <string>

namespace nnquad {

SampledFunction::SampledFunction(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.size() != ys_.size())
        throw ValidationError("sampled function needs as many values as abscissae");
    if (xs_.size() < 2)
        throw ValidationError("sampled function needs at least two samples");
    for (std::size_t i = 1; i < xs_.size(); ++i)
        if (!(xs_[i - 1] < xs_[i]))
            throw ValidationError("sample abscissae must be strictly increasing");
}

double SampledFunction::operator()(double x) const {
    if (!(x >= xs_.front() && x <= xs_.back()))
        throw DomainError("x = " + std::to_string(x) + " outside sampled range [" +
                          std::to_string(xs_.front()) + ", " + std::to_string(xs_.back()) + "]");
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    if (it == xs_.end())
        return ys_.back();
    const std::size_t hi = static_cast<std::size_t>(it - xs_.begin());
    const std::size_t lo = hi - 1;
    const double t = (x - xs_[lo]) / (xs_[hi] - xs_[lo]);
    return ys_[lo] + t * (ys_[hi] - ys_[lo]);
}

Curve euler_integrate(const ScalarFn& f, double a, double b, std::size_t steps) {
    if (steps == 0)
        throw ValidationError("euler_integrate needs at least one step");
    const double h = (b - a) / static_cast<double>(steps);
    Curve c;
    c.x.reserve(steps + 1);
    c.value.reserve(steps + 1);
    double acc = 0.0;
    c.x.push_back(a);
    c.value.push_back(0.0);
    for (std::size_t k = 0; k < steps; ++k) {
        acc += h * f(a + static_cast<double>(k) * h);
        c.x.push_back(k + 1 == steps ? b : a + static_cast<double>(k + 1) * h);
        c.value.push_back(acc);
    }
    return c;
}

Curve euler_integrate(const SampledFunction& f, double a, double b, std::size_t steps) {
    if (a < f.xs().front() || b > f.xs().back())
        throw DomainError("euler interval [" + std::to_string(a) + ", " + std::to_string(b) +
                          "] leaves the sampled range");
    return euler_integrate(ScalarFn([&f](double x) { return f(x); }), a, b, steps);
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)

namespace {

constexpr std::array<double, 7> kC{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
// 5th-order weights (also the last row of the tableau, FSAL).
constexpr std::array<double, 7> kB{35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192,
                                   -2187.0 / 6784, 11.0 / 84, 0.0};
// Difference between the 5th- and 4th-order weights.
constexpr std::array<double, 7> kE{71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920,
                                   -17253.0 / 339200, 22.0 / 525, -1.0 / 40};
// Continuous extension (Hairer, Norsett & Wanner, dense output of DOPRI5).
constexpr std::array<double, 7> kD{-12715105075.0 / 11282082432, 0.0, 87487479700.0 / 32700410799,
                                   -10690763975.0 / 1880347072, 701980252875.0 / 199316789632,
                                   -1453857185.0 / 822651844, 69997945.0 / 29380423};

struct Step {
    double t;
    double h;
    double y;
    double y_new;
    std::array<double, 7> k;
};

// Dense output y(t + theta h) of an accepted step, theta in [0, 1].
double dense(const Step& s, double theta) {
    const double dy = s.y_new - s.y;
    double bspl = s.h * s.k[0] - dy;
    double r5 = 0.0;
    for (std::size_t i = 0; i < 7; ++i)
        r5 += kD[i] * s.k[i];
    r5 *= s.h;
    const double r3 = dy - s.h * s.k[6] - bspl;
    const double theta1 = 1.0 - theta;
    return s.y + theta * (dy + theta1 * (bspl + theta * (r3 + theta1 * r5)));
}

}  // namespace

Rk45Result rk45_integrate(const ScalarFn& f, double a, double b, const Rk45Options& options) {
    if (!(options.rel_tol > 0.0) || !(options.abs_tol > 0.0))
        throw ValidationError("rk45 tolerances must be positive");
    if (!(a <= b))
        throw ValidationError("rk45 needs a <= b");
    for (double p : options.output_points)
        if (!(p >= a && p <= b))
            throw DomainError("rk45 output point " + std::to_string(p) + " outside [a, b]");

    Rk45Result res;
    const bool dense_out = !options.output_points.empty();
    std::size_t next_out = 0;
    auto emit = [&](double x, double v) {
        res.curve.x.push_back(x);
        res.curve.value.push_back(v);
    };
    if (!dense_out)
        emit(a, 0.0);
    if (a == b) {
        for (double p : options.output_points)
            emit(p, 0.0);
        return res;
    }

    // Hairer's PI controller constants.
    constexpr double safety = 0.9;
    constexpr double beta = 0.04;
    constexpr double expo1 = 0.2 - beta * 0.75;
    constexpr double fac_min = 0.2;   // step may shrink by at most 5x
    constexpr double fac_max = 10.0;  // and grow by at most 10x
    const double h_min = 1e-14 * (b - a);

    double t = a;
    double y = 0.0;
    double h = b - a;
    double err_old = 1e-4;
    bool last_rejected = false;
    double k0 = f(t);
    ++res.evaluations;

    while (t < b) {
        if (h < h_min)
            throw StiffnessError("rk45 step size underflow at t = " + std::to_string(t));
        const bool final_step = t + h >= b;
        if (final_step)
            h = b - t;

        Step s{t, h, y, 0.0, {}};
        s.k[0] = k0;
        for (std::size_t i = 1; i < 6; ++i) {
            s.k[i] = f(std::min(t + kC[i] * h, b));
            ++res.evaluations;
        }
        double incr = 0.0;
        for (std::size_t i = 0; i < 6; ++i)
            incr += kB[i] * s.k[i];
        s.y_new = y + h * incr;
        s.k[6] = f(final_step ? b : t + h);
        ++res.evaluations;

        double e = 0.0;
        for (std::size_t i = 0; i < 7; ++i)
            e += kE[i] * s.k[i];
        e *= h;
        const double scale =
            options.abs_tol + options.rel_tol * std::max(std::fabs(y), std::fabs(s.y_new));
        const double err = std::fabs(e) / scale;

        const double fac11 = std::pow(err, expo1);
        double fac = fac11 / std::pow(err_old, beta);
        fac = std::clamp(fac / safety, 1.0 / fac_max, 1.0 / fac_min);
        double h_new = h / fac;

        if (err <= 1.0) {
            err_old = std::max(err, 1e-4);
            ++res.accepted_steps;
            const double t_new = final_step ? b : t + h;
            if (dense_out) {
                while (next_out < options.output_points.size() &&
                       (options.output_points[next_out] <= t_new)) {
                    const double p = options.output_points[next_out];
                    const double v = p == t_new ? s.y_new : dense(s, (p - t) / h);
                    emit(p, v);
                    ++next_out;
                }
            } else {
                emit(t_new, s.y_new);
            }
            t = t_new;
            y = s.y_new;
            k0 = s.k[6];
            if (last_rejected)
                h_new = std::min(h_new, h);
            last_rejected = false;
        } else {
            h_new = h / std::min(1.0 / fac_min, fac11 / safety);
            ++res.rejected_steps;
            last_rejected = true;
        }
        h = h_new;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Adaptive Gauss-Lobatto-Kronrod

namespace {

// 4-point Gauss-Lobatto rule and its 7-point Kronrod extension on [-1, 1].
// Both rules sample the endpoints, so a kink next to a segment end still
// moves the estimate.
const double kAlpha = std::sqrt(2.0 / 3.0);
const double kBeta = 1.0 / std::sqrt(5.0);

struct Segment {
    double lo;
    double hi;
    double estimate;
    double error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

Segment lobatto_kronrod(const ScalarFn& f, double lo, double hi, std::size_t& evals) {
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double ends = f(lo) + f(hi);
    const double beta = f(center - kBeta * half) + f(center + kBeta * half);
    const double alpha = f(center - kAlpha * half) + f(center + kAlpha * half);
    const double mid = f(center);
    evals += 7;
    const double lobatto = ends / 6.0 + 5.0 * beta / 6.0;
    const double kronrod = 11.0 / 210.0 * ends + 72.0 / 245.0 * alpha + 125.0 / 294.0 * beta + 16.0 / 35.0 * mid;
    return {lo, hi, kronrod * half, std::fabs((kronrod - lobatto) * half)};
}

// The Kronrod - Lobatto gap can vanish for a kink at isolated positions, so the
// whole-segment rule is also compared against the sum over both halves.
Segment assess(const ScalarFn& f, double lo, double hi, std::size_t& evals) {
    const double mid = 0.5 * (lo + hi);
    const Segment whole = lobatto_kronrod(f, lo, hi, evals);
    const Segment left = lobatto_kronrod(f, lo, mid, evals);
    const Segment right = lobatto_kronrod(f, mid, hi, evals);
    const double refined = left.estimate + right.estimate;
    const double error = std::max(std::fabs(whole.estimate - refined), left.error + right.error);
    return {lo, hi, refined, error};
}

}  // namespace

QuadratureResult reference_quadrature(const ScalarFn& f, double a, double b, double tol) {
    if (!(tol > 0.0))
        throw ValidationError("quadrature tolerance must be positive");
    if (!(a <= b))
        throw ValidationError("quadrature needs a <= b");
    QuadratureResult res;
    if (a == b) {
        res.evaluations = 1;
        return res;
    }
    constexpr std::size_t max_segments = 200000;
    constexpr double min_width = 1e-12;

    std::priority_queue<Segment> open;
    std::vector<Segment> done;  // too narrow to split further
    open.push(assess(f, a, b, res.evaluations));
    double total_error = open.top().error;

    while (total_error > tol && !open.empty() && open.size() + done.size() < max_segments) {
        Segment worst = open.top();
        open.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (worst.hi - worst.lo < 2.0 * min_width || mid <= worst.lo || mid >= worst.hi) {
            done.push_back(worst);
            continue;
        }
        Segment left = assess(f, worst.lo, mid, res.evaluations);
        Segment right = assess(f, mid, worst.hi, res.evaluations);
        total_error += left.error + right.error - worst.error;
        open.push(left);
        open.push(right);
    }

    // Sum in left-to-right order so the estimate does not depend on heap layout.
    std::vector<Segment> all = std::move(done);
    while (!open.empty()) {
        all.push_back(open.top());
        open.pop();
    }
    std::sort(all.begin(), all.end(), [](const Segment& x, const Segment& y) { return x.lo < y.lo; });
    double estimate = 0.0;
    double error = 0.0;
    for (const Segment& s : all) {
        estimate += s.estimate;
        error += s.error;
    }
    res.estimate = estimate;
    res.error_estimate = error;
    if (error > tol)
        throw ToleranceNotMet("adaptive quadrature stopped with error bound " +
                                  std::to_string(error) + " above tolerance " + std::to_string(tol),
                              estimate, error);
    return res;
}

QuadratureResult mc_box_integrate(const FieldFn& f, const Box& box, std::size_t samples,
                                  std::uint64_t seed) {
    box.validate();
    if (samples < 2)
        throw ValidationError("Monte Carlo needs at least two samples");
    Rng rng(seed);
    std::vector<double> point(box.dim());
    // Welford running mean and variance.
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        for (std::size_t d = 0; d < point.size(); ++d)
            point[d] = rng.uniform(box.lo[d], box.hi[d]);
        const double y = f(point);
        const double delta = y - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (y - mean);
    }
    const double volume = box.volume();
    const double n = static_cast<double>(samples);
    QuadratureResult res;
    res.estimate = volume * mean;
    res.evaluations = samples;
    res.standard_error = volume * std::sqrt(m2 / (n - 1.0)) / std::sqrt(n);
    return res;
}

}  // namespace nnquad
