#pragma once

#include <cstddef>
#include <vector>

namespace nhl {

// Dense row-major matrix of 64-bit floats. Workhorse of all numeric code.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // length rows*cols, row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }

    std::size_t size() const { return rows * cols; }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// Standard product with deterministic row-major accumulation order.
Matrix matmul(const Matrix& a, const Matrix& b);

// a * b^T, the common shape in this codebase (batch times weight rows).
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// a^T * b.
Matrix matmul_tn(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& a);

// Sum of elementwise products; both matrices flattened.
double flat_inner(const Matrix& a, const Matrix& b);

Matrix tanh_map(const Matrix& a);

// Derivative 1 - y^2 computed from the forward output y.
Matrix tanh_deriv(const Matrix& y);

// log(1/(1+e^{-x})) without overflow for large |x|.
double log_sigmoid(double x);

bool all_finite(const Matrix& a);

// First n rows as a copy.
Matrix slice_rows(const Matrix& a, std::size_t n);

// First n columns as a copy.
Matrix slice_cols(const Matrix& a, std::size_t n);

}  // namespace nhl
