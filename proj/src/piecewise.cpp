#include "nnquad/piecewise.hpp"

#include "nnquad/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nnquad {

Partition::Partition(std::vector<double> points, Representative mode)
    : points_(std::move(points)), mode_(mode) {
    if (points_.size() < 2)
        throw ValidationError("partition needs at least two points, got " +
                              std::to_string(points_.size()));
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!std::isfinite(points_[i]))
            throw ValidationError("partition point " + std::to_string(i) + " is not finite");
        if (i > 0 && !(points_[i - 1] < points_[i]))
            throw ValidationError("partition points must be strictly increasing (index " +
                                  std::to_string(i) + ")");
    }
}

Partition Partition::uniform(double lo, double hi, std::size_t n, Representative mode) {
    if (n < 2)
        throw ValidationError("uniform partition needs at least two points");
    std::vector<double> pts(n);
    const double h = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i)
        pts[i] = lo + static_cast<double>(i) * h;
    pts.back() = hi;
    return Partition(std::move(pts), mode);
}

Vector poly_eval(const AffinePiece& piece, std::size_t coord, const Vector& x) {
    if (coord >= piece.alpha.cols())
        throw IndexError("coordinate " + std::to_string(coord) + " out of range for input dim " +
                         std::to_string(piece.alpha.cols()));
    if (x.size() != piece.alpha.cols())
        throw ShapeError("poly_eval: point has length " + std::to_string(x.size()) +
                         ", piece expects " + std::to_string(piece.alpha.cols()));
    Vector out(piece.alpha.rows());
    const double xj = x[coord];
    for (std::size_t r = 0; r < out.size(); ++r) {
        const auto row = piece.alpha.row(r);
        double rest = piece.beta[r];
        for (std::size_t k = 0; k < row.size(); ++k)
            if (k != coord)
                rest += row[k] * x[k];
        out[r] = 0.5 * row[coord] * xj * xj + rest * xj;
    }
    return out;
}

namespace {

void check_segment(const Network& net, const LineSegment& seg, const Partition& part) {
    require_relu(net);
    if (seg.base.size() != net.input_dim())
        throw ShapeError("segment base point has length " + std::to_string(seg.base.size()) +
                         ", network expects " + std::to_string(net.input_dim()));
    if (seg.coord >= net.input_dim())
        throw IndexError("coordinate " + std::to_string(seg.coord) + " out of range for input dim " +
                         std::to_string(net.input_dim()));
    if (!(seg.lo <= seg.hi))
        throw ValidationError("segment lower bound exceeds upper bound");
    if (part.points().front() != seg.lo || part.points().back() != seg.hi)
        throw ValidationError("partition must start at the segment's lower bound and end at its "
                              "upper bound");
}

Vector at(const LineSegment& seg, double z) {
    Vector p = seg.base;
    p[seg.coord] = z;
    return p;
}

}  // namespace

CorrectedIntegral corrected_integral(const Network& net, const LineSegment& seg,
                                     const Partition& part) {
    check_segment(net, seg, part);
    const auto& z = part.points();
    const std::size_t n = z.size();
    const std::size_t j = seg.coord;

    // piece k governs [z_k, z_{k+1}]; the last one only closes the recursion. In left
    // mode it is traced at z_N itself, as the classical corrector does; in midpoint
    // mode it repeats the final subinterval's piece.
    std::vector<AffinePiece> pieces;
    pieces.reserve(n);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double rep = part.mode() == Representative::left ? z[k] : 0.5 * (z[k] + z[k + 1]);
        pieces.push_back(local_affine(net, at(seg, rep)));
    }
    if (part.mode() == Representative::left)
        pieces.push_back(local_affine(net, at(seg, z[n - 1])));
    else
        pieces.push_back(pieces.back());

    CorrectedIntegral out;
    out.constants.reserve(n);
    out.samples.reserve(n);
    const std::size_t m = net.output_dim();
    Vector constant(m, 0.0);
    const AffinePiece* prev = nullptr;
    for (std::size_t k = 0; k < n; ++k) {
        const Vector point = at(seg, z[k]);
        const Vector cur_poly = poly_eval(pieces[k], j, point);
        const Vector prev_poly = prev ? poly_eval(*prev, j, point) : Vector(m, 0.0);
        Vector sample(m);
        for (std::size_t r = 0; r < m; ++r) {
            constant[r] = prev_poly[r] - cur_poly[r] + constant[r];
            sample[r] = cur_poly[r] + constant[r];
        }
        out.constants.push_back(constant);
        out.samples.push_back(std::move(sample));
        prev = &pieces[k];
    }
    out.total = out.samples.back();
    return out;
}

std::vector<CurvePoint> antiderivative_curve(const Network& net, const LineSegment& seg,
                                             const Partition& part) {
    CorrectedIntegral ci = corrected_integral(net, seg, part);
    std::vector<CurvePoint> curve;
    curve.reserve(part.size());
    for (std::size_t k = 0; k < part.size(); ++k)
        curve.push_back({part.points()[k], std::move(ci.samples[k])});
    return curve;
}

// ---------------------------------------------------------------------------
// Breakpoint search

namespace {

// On [lo, hi] every current activation is slope * x + intercept.
struct Piece {
    double lo;
    double hi;
    std::vector<double> slope;
    std::vector<double> intercept;
    std::vector<double> skip_slope;  // residual path, set while inside a block
    std::vector<double> skip_intercept;
};

class BreakpointSearch {
public:
    BreakpointSearch(double a, double b) { pieces_.push_back({a, b, {1.0}, {0.0}, {}, {}}); }

    void layer(const AffineView& view) {
        std::vector<Piece> next;
        for (Piece& p : pieces_) {
            const std::size_t rows = view.weight.rows();
            std::vector<double> s(rows, 0.0);
            std::vector<double> c(rows, 0.0);
            for (std::size_t r = 0; r < rows; ++r) {
                const auto w = view.weight.row(r);
                double sr = 0.0;
                double cr = view.bias[r];
                for (std::size_t k = 0; k < w.size(); ++k) {
                    sr += w[k] * p.slope[k];
                    cr += w[k] * p.intercept[k];
                }
                s[r] = sr;
                c[r] = cr;
            }
            if (view.activation == Activation::identity) {
                p.slope = std::move(s);
                p.intercept = std::move(c);
                next.push_back(std::move(p));
                continue;
            }
            // Zeros of each affine pre-activation strictly inside the piece.
            std::vector<double> cuts;
            for (std::size_t r = 0; r < rows; ++r) {
                if (s[r] == 0.0)
                    continue;
                const double root = -c[r] / s[r];
                if (root > p.lo && root < p.hi)
                    cuts.push_back(root);
            }
            std::sort(cuts.begin(), cuts.end());
            cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
            roots_.insert(roots_.end(), cuts.begin(), cuts.end());

            double left = p.lo;
            for (std::size_t i = 0; i <= cuts.size(); ++i) {
                const double right = i < cuts.size() ? cuts[i] : p.hi;
                const double mid = 0.5 * (left + right);
                Piece q{left, right, s, c, p.skip_slope, p.skip_intercept};
                for (std::size_t r = 0; r < rows; ++r) {
                    if (!(s[r] * mid + c[r] > 0.0)) {
                        q.slope[r] = 0.0;
                        q.intercept[r] = 0.0;
                    }
                }
                next.push_back(std::move(q));
                left = right;
            }
            if (next.size() > kMaxPieces)
                throw Error("breakpoint search exceeded " + std::to_string(kMaxPieces) +
                            " linear pieces");
        }
        pieces_ = std::move(next);
    }

    void begin_residual() {
        for (Piece& p : pieces_) {
            p.skip_slope = p.slope;
            p.skip_intercept = p.intercept;
        }
    }

    void end_residual() {
        for (Piece& p : pieces_) {
            for (std::size_t r = 0; r < p.slope.size(); ++r) {
                p.slope[r] += p.skip_slope[r];
                p.intercept[r] += p.skip_intercept[r];
            }
            p.skip_slope.clear();
            p.skip_intercept.clear();
        }
    }

    std::vector<double> result() {
        std::sort(roots_.begin(), roots_.end());
        std::vector<double> out;
        for (double r : roots_)
            if (out.empty() || r - out.back() > 1e-12)
                out.push_back(r);
        return out;
    }

private:
    std::vector<Piece> pieces_;
    std::vector<double> roots_;
};

void require_scalar_input(const Network& net) {
    if (net.input_dim() != 1)
        throw StructuralError("1-D breakpoint search needs a scalar-input network, got input_dim " +
                              std::to_string(net.input_dim()));
}

}  // namespace

std::vector<double> breakpoints_1d(const Network& net, double a, double b) {
    require_relu(net);
    require_scalar_input(net);
    if (!(a <= b))
        throw ValidationError("interval lower bound exceeds upper bound");
    BreakpointSearch search(a, b);
    const auto& layers = net.layers();
    // The output layer is affine and adds no breakpoints.
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
        if (const auto* block = std::get_if<ResidualBlock>(&layers[i])) {
            search.begin_residual();
            for (const auto& inner : block->layers)
                search.layer(affine_view(inner));
            search.end_residual();
        } else if (const auto* dense = std::get_if<DenseLayer>(&layers[i])) {
            search.layer(affine_view(*dense));
        } else {
            search.layer(affine_view(std::get<ConvLayer>(layers[i])));
        }
    }
    return search.result();
}

Vector exact_integral_1d(const Network& net, double a, double b) {
    std::vector<double> pts = breakpoints_1d(net, a, b);
    if (a == b)
        return Vector(net.output_dim(), 0.0);
    pts.insert(pts.begin(), a);
    pts.push_back(b);
    return corrected_integral(net, LineSegment::scalar(a, b), Partition(std::move(pts))).total;
}

}  // namespace nnquad
