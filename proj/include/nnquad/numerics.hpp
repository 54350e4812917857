#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nnquad {

// Dense vector of doubles. Thin value wrapper so shapes show up in signatures.
class Vector {
public:
    Vector() = default;
    explicit Vector(std::size_t n, double fill = 0.0) : data_(n, fill) {}
    explicit Vector(std::vector<double> values) : data_(std::move(values)) {}
    Vector(std::initializer_list<double> values) : data_(values) {}

    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

    std::span<double> span() noexcept { return data_; }
    std::span<const double> span() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    bool all_finite() const noexcept;

    Vector& operator+=(const Vector& other);
    friend bool operator==(const Vector&, const Vector&) = default;

private:
    std::vector<double> data_;
};

// Row-major dense matrix, rows >= 1 and cols >= 1.
class Matrix {
public:
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);
    static Matrix identity(std::size_t n);
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> data() const noexcept { return data_; }

    bool all_finite() const noexcept;
    std::string shape_string() const;

    Matrix& operator+=(const Matrix& other);
    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

Vector matvec(const Matrix& m, const Vector& v);
Matrix matmul(const Matrix& a, const Matrix& b);

// Spatial shape of a single-channel convolution input: {length} or {height, width}.
using ConvShape = std::vector<std::size_t>;

struct LoweredConv {
    Matrix weight;
    Vector bias;
    ConvShape output_shape;
};

// Output shape of a stride/zero-padding cross-correlation. Throws ShapeError if the
// kernel does not fit the padded input. One-dimensional inputs take a 1-row kernel
// and are padded along their length only.
ConvShape conv_output_shape(const Matrix& kernel, const ConvShape& input_shape,
                            std::size_t stride, std::size_t padding);

// Dense matrix M and bias c with flatten(kernel * x + b) == M * flatten(x) + c.
// `bias` has one entry, replicated over every output position.
LoweredConv conv_to_matrix(const Matrix& kernel, const Vector& bias, const ConvShape& input_shape,
                           std::size_t stride, std::size_t padding);

}  // namespace nnquad
