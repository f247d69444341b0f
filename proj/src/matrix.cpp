#include "nhl/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace nhl {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("matmul: inner dimensions disagree");
    }
    Matrix out(a.rows, b.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double av = arow[k];
            if (av == 0.0) continue;
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) {
                orow[j] += av * brow[j];
            }
        }
    }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) {
        throw std::invalid_argument("matmul_nt: inner dimensions disagree");
    }
    Matrix out(a.rows, b.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) {
                acc += arow[k] * brow[k];
            }
            orow[j] = acc;
        }
    }
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) {
        throw std::invalid_argument("matmul_tn: inner dimensions disagree");
    }
    Matrix out(a.cols, b.cols, 0.0);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* arow = a.row(k);
        const double* brow = b.row(k);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* orow = out.row(i);
            for (std::size_t j = 0; j < b.cols; ++j) {
                orow[j] += av * brow[j];
            }
        }
    }
    return out;
}

double frobenius_norm(const Matrix& a) {
    double acc = 0.0;
    for (double v : a.data) acc += v * v;
    return std::sqrt(acc);
}

double flat_inner(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("flat_inner: shape mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
    return acc;
}

Matrix tanh_map(const Matrix& a) {
    Matrix out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = std::tanh(a.data[i]);
    return out;
}

Matrix tanh_deriv(const Matrix& y) {
    Matrix out(y.rows, y.cols);
    for (std::size_t i = 0; i < y.data.size(); ++i) out.data[i] = 1.0 - y.data[i] * y.data[i];
    return out;
}

double log_sigmoid(double x) {
    if (x >= 0.0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

bool all_finite(const Matrix& a) {
    for (double v : a.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Matrix slice_rows(const Matrix& a, std::size_t n) {
    if (n > a.rows) throw std::invalid_argument("slice_rows: too many rows requested");
    Matrix out(n, a.cols);
    std::copy(a.data.begin(), a.data.begin() + static_cast<std::ptrdiff_t>(n * a.cols),
              out.data.begin());
    return out;
}

Matrix slice_cols(const Matrix& a, std::size_t n) {
    if (n > a.cols) throw std::invalid_argument("slice_cols: too many columns requested");
    Matrix out(a.rows, n);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* src = a.row(i);
        double* dst = out.row(i);
        for (std::size_t j = 0; j < n; ++j) dst[j] = src[j];
    }
    return out;
}

}  // namespace nhl
