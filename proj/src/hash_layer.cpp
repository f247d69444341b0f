#include "nhl/hash_layer.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "nhl/errors.hpp"

namespace nhl {

NestedHashLayer init_nhl(const std::vector<std::uint32_t>& lengths, std::size_t l,
                         std::uint64_t seed) {
    NestedHashLayer layer;
    layer.lengths = lengths;
    const std::size_t b_m = lengths.empty() ? 0 : lengths.back();
    const double bound = std::sqrt(6.0 / static_cast<double>(b_m + l + 1));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-bound, bound);
    layer.W = Matrix(b_m, l + 1);
    for (double& v : layer.W.data) v = dist(rng);
    validate_layer(layer);
    return layer;
}

void validate_layer(const NestedHashLayer& layer) {
    if (layer.lengths.empty()) throw config_error("hash layer: empty lengths");
    for (std::size_t i = 0; i + 1 < layer.lengths.size(); ++i) {
        if (layer.lengths[i] >= layer.lengths[i + 1]) {
            throw config_error("hash layer: lengths must be strictly increasing");
        }
    }
    if (layer.lengths.front() == 0) throw config_error("hash layer: zero code length");
    if (layer.W.rows != layer.lengths.back()) {
        throw config_error("hash layer: W.rows must equal the longest code length");
    }
    if (layer.W.cols < 2) throw config_error("hash layer: W needs at least one feature column");
}

Matrix nhl_forward(const NestedHashLayer& layer, const Matrix& v) {
    if (v.cols != layer.feature_dim()) {
        throw std::invalid_argument("nhl_forward: feature dim mismatch");
    }
    const std::size_t b_m = layer.W.rows;
    const std::size_t l = v.cols;
    Matrix u(v.rows, b_m);
    for (std::size_t i = 0; i < v.rows; ++i) {
        const double* vrow = v.row(i);
        double* urow = u.row(i);
        for (std::size_t r = 0; r < b_m; ++r) {
            const double* wrow = layer.W.row(r);
            double acc = wrow[l];  // bias column times the augmented 1
            for (std::size_t j = 0; j < l; ++j) acc += wrow[j] * vrow[j];
            urow[r] = std::tanh(acc);
        }
    }
    return u;
}

Matrix binarize(const Matrix& u) {
    Matrix out(u.rows, u.cols);
    for (std::size_t i = 0; i < u.data.size(); ++i) {
        out.data[i] = u.data[i] >= 0.0 ? 1.0 : -1.0;
    }
    return out;
}

namespace {

// upstream chained through tanh on the first b_k columns of U.
Matrix tanh_chain(const Matrix& u, std::size_t b_k, const Matrix& upstream) {
    Matrix dz(upstream.rows, b_k);
    for (std::size_t i = 0; i < upstream.rows; ++i) {
        const double* urow = u.row(i);
        const double* grow = upstream.row(i);
        double* drow = dz.row(i);
        for (std::size_t r = 0; r < b_k; ++r) {
            drow[r] = grow[r] * (1.0 - urow[r] * urow[r]);
        }
    }
    return dz;
}

void check_head_args(const NestedHashLayer& layer, const Matrix& v, const Matrix& u,
                     std::size_t k_index, const Matrix& upstream) {
    if (k_index >= layer.lengths.size()) {
        throw std::invalid_argument("head gradient: length index out of range");
    }
    const std::size_t b_k = layer.lengths[k_index];
    if (upstream.rows != v.rows || upstream.cols != b_k || u.rows != v.rows ||
        u.cols != layer.W.rows || v.cols != layer.feature_dim()) {
        throw std::invalid_argument("head gradient: shape mismatch");
    }
}

}  // namespace

Matrix head_weight_grad(const NestedHashLayer& layer, const Matrix& v, const Matrix& u,
                        std::size_t k_index, const Matrix& upstream) {
    check_head_args(layer, v, u, k_index, upstream);
    const std::size_t b_k = layer.lengths[k_index];
    const std::size_t l = v.cols;
    const Matrix dz = tanh_chain(u, b_k, upstream);
    Matrix g(b_k, l + 1, 0.0);
    for (std::size_t i = 0; i < dz.rows; ++i) {
        const double* drow = dz.row(i);
        const double* vrow = v.row(i);
        for (std::size_t r = 0; r < b_k; ++r) {
            const double d = drow[r];
            if (d == 0.0) continue;
            double* grow = g.row(r);
            for (std::size_t j = 0; j < l; ++j) grow[j] += d * vrow[j];
            grow[l] += d;
        }
    }
    return g;
}

HeadGrad head_backward(const NestedHashLayer& layer, const Matrix& v, const Matrix& u,
                       std::size_t k_index, const Matrix& upstream) {
    check_head_args(layer, v, u, k_index, upstream);
    const std::size_t b_k = layer.lengths[k_index];
    const std::size_t l = v.cols;
    const Matrix dz = tanh_chain(u, b_k, upstream);

    HeadGrad out;
    out.w_grad = Matrix(b_k, l + 1, 0.0);
    out.input_grad = Matrix(v.rows, l, 0.0);
    for (std::size_t i = 0; i < dz.rows; ++i) {
        const double* drow = dz.row(i);
        const double* vrow = v.row(i);
        double* dvrow = out.input_grad.row(i);
        for (std::size_t r = 0; r < b_k; ++r) {
            const double d = drow[r];
            if (d == 0.0) continue;
            const double* wrow = layer.W.row(r);
            double* grow = out.w_grad.row(r);
            for (std::size_t j = 0; j < l; ++j) {
                grow[j] += d * vrow[j];
                dvrow[j] += d * wrow[j];
            }
            grow[l] += d;
        }
    }
    return out;
}

Matrix accumulate_W_grad(std::size_t b_m, std::size_t cols,
                         const std::vector<WeightedPart>& parts) {
    Matrix out(b_m, cols, 0.0);
    for (const WeightedPart& part : parts) {
        const Matrix& g = *part.grad;
        if (g.rows > b_m || g.cols != cols) {
            throw std::invalid_argument("accumulate_W_grad: part shape mismatch");
        }
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            out.data[i] += part.weight * g.data[i];
        }
    }
    return out;
}

}  // namespace nhl
