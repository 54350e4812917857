#include "nnquad/numerics.hpp"

#include "nnquad/errors.hpp"

#include <algorithm>
#include <cmath>

namespace nnquad {

namespace {

std::string vec_shape(std::size_t n) { return "(" + std::to_string(n) + ")"; }

bool finite_range(std::span<const double> xs) {
    return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

bool Vector::all_finite() const noexcept { return finite_range(data_); }

Vector& Vector::operator+=(const Vector& other) {
    if (other.size() != size())
        throw ShapeError("vector add: " + vec_shape(size()) + " vs " + vec_shape(other.size()));
    for (std::size_t i = 0; i < data_.size(); ++i)
        data_[i] += other.data_[i];
    return *this;
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0)
        throw ShapeError("matrix must have at least one row and column, got " + shape_string());
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
    if (rows == 0 || cols == 0)
        throw ShapeError("matrix must have at least one row and column, got " + shape_string());
    if (data_.size() != rows * cols)
        throw ShapeError("matrix " + shape_string() + " given " + std::to_string(data_.size()) +
                         " entries");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty())
        throw ShapeError("matrix must have at least one row and column");
    const std::size_t cols = rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols)
            throw ShapeError("ragged matrix: row " + std::to_string(r) + " has " +
                             std::to_string(rows[r].size()) + " entries, expected " +
                             std::to_string(cols));
        flat.insert(flat.end(), rows[r].begin(), rows[r].end());
    }
    return Matrix(rows.size(), cols, std::move(flat));
}

bool Matrix::all_finite() const noexcept { return finite_range(data_); }

std::string Matrix::shape_string() const {
    return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

Matrix& Matrix::operator+=(const Matrix& other) {
    if (other.rows_ != rows_ || other.cols_ != cols_)
        throw ShapeError("matrix add: " + shape_string() + " vs " + other.shape_string());
    for (std::size_t i = 0; i < data_.size(); ++i)
        data_[i] += other.data_[i];
    return *this;
}

Vector matvec(const Matrix& m, const Vector& v) {
    if (m.cols() != v.size())
        throw ShapeError("matvec: matrix " + m.shape_string() + " times vector " +
                         vec_shape(v.size()));
    Vector out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c)
            acc += row[c] * v[c];
        out[r] = acc;
    }
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: " + a.shape_string() + " times " + b.shape_string());
    Matrix out(a.rows(), b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto dst = out.row(r);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double s = a(r, k);
            if (s == 0.0)
                continue;
            const auto src = b.row(k);
            for (std::size_t c = 0; c < src.size(); ++c)
                dst[c] += s * src[c];
        }
    }
    return out;
}

namespace {

struct Geometry {
    std::size_t in_h, in_w, pad_h, pad_w;
};

Geometry conv_geometry(const Matrix& kernel, const ConvShape& input_shape, std::size_t padding) {
    if (input_shape.size() == 1) {
        if (kernel.rows() != 1)
            throw ShapeError("1-D convolution needs a single-row kernel, got " +
                             kernel.shape_string());
        return {1, input_shape[0], 0, padding};
    }
    if (input_shape.size() == 2)
        return {input_shape[0], input_shape[1], padding, padding};
    throw ShapeError("convolution input shape must have rank 1 or 2, got rank " +
                     std::to_string(input_shape.size()));
}

}  // namespace

ConvShape conv_output_shape(const Matrix& kernel, const ConvShape& input_shape,
                            std::size_t stride, std::size_t padding) {
    if (stride == 0)
        throw ShapeError("convolution stride must be >= 1");
    const Geometry g = conv_geometry(kernel, input_shape, padding);
    if (g.in_h == 0 || g.in_w == 0)
        throw ShapeError("convolution input shape has a zero extent");
    const std::size_t ph = g.in_h + 2 * g.pad_h;
    const std::size_t pw = g.in_w + 2 * g.pad_w;
    if (kernel.rows() > ph || kernel.cols() > pw)
        throw ShapeError("kernel " + kernel.shape_string() + " larger than padded input (" +
                         std::to_string(ph) + "x" + std::to_string(pw) + ")");
    const std::size_t out_h = (ph - kernel.rows()) / stride + 1;
    const std::size_t out_w = (pw - kernel.cols()) / stride + 1;
    if (input_shape.size() == 1)
        return {out_w};
    return {out_h, out_w};
}

LoweredConv conv_to_matrix(const Matrix& kernel, const Vector& bias, const ConvShape& input_shape,
                           std::size_t stride, std::size_t padding) {
    if (bias.size() != 1)
        throw ShapeError("convolution bias must have exactly one entry, got " +
                         std::to_string(bias.size()));
    ConvShape out_shape = conv_output_shape(kernel, input_shape, stride, padding);
    const Geometry g = conv_geometry(kernel, input_shape, padding);
    const std::size_t out_h = input_shape.size() == 1 ? 1 : out_shape[0];
    const std::size_t out_w = out_shape.back();

    Matrix m(out_h * out_w, g.in_h * g.in_w);
    for (std::size_t oy = 0; oy < out_h; ++oy) {
        for (std::size_t ox = 0; ox < out_w; ++ox) {
            const std::size_t out_index = oy * out_w + ox;
            for (std::size_t ky = 0; ky < kernel.rows(); ++ky) {
                // Padded coordinates; anything landing in the zero border contributes nothing.
                const std::size_t py = oy * stride + ky;
                if (py < g.pad_h || py >= g.pad_h + g.in_h)
                    continue;
                for (std::size_t kx = 0; kx < kernel.cols(); ++kx) {
                    const std::size_t px = ox * stride + kx;
                    if (px < g.pad_w || px >= g.pad_w + g.in_w)
                        continue;
                    m(out_index, (py - g.pad_h) * g.in_w + (px - g.pad_w)) += kernel(ky, kx);
                }
            }
        }
    }
    return {std::move(m), Vector(out_h * out_w, bias[0]), std::move(out_shape)};
}

}  // namespace nnquad
