#pragma once

#include <cstdint>
#include <vector>

#include "nhl/matrix.hpp"

namespace nhl {

// Single weight matrix whose row-prefixes realize hash heads at every
// configured length. The bias is folded in as the last column and applies
// to the augmented feature [v; 1].
struct NestedHashLayer {
    Matrix W;                            // b_m x (l+1)
    std::vector<std::uint32_t> lengths;  // strictly increasing, back() == W.rows

    std::size_t max_length() const { return lengths.empty() ? 0 : lengths.back(); }
    std::size_t feature_dim() const { return W.cols == 0 ? 0 : W.cols - 1; }
};

// Glorot-initialized layer for the given lengths and feature dimension l.
NestedHashLayer init_nhl(const std::vector<std::uint32_t>& lengths, std::size_t l,
                         std::uint64_t seed);

void validate_layer(const NestedHashLayer& layer);

// Relaxed codes for all lengths at once: U = tanh([V,1] W^T), B x b_m.
// The length-k codes are the first b_k columns.
Matrix nhl_forward(const NestedHashLayer& layer, const Matrix& v);

// sign with sign(0) = +1.
Matrix binarize(const Matrix& u);

// Gradient of a loss on the length-k head w.r.t. the first b_k rows of W.
// upstream is dL/dU_k (B x b_k); result is b_k x (l+1).
Matrix head_weight_grad(const NestedHashLayer& layer, const Matrix& v, const Matrix& u,
                        std::size_t k_index, const Matrix& upstream);

struct HeadGrad {
    Matrix w_grad;      // b_k x (l+1)
    Matrix input_grad;  // B x l, augmentation column dropped
};

HeadGrad head_backward(const NestedHashLayer& layer, const Matrix& v, const Matrix& u,
                       std::size_t k_index, const Matrix& upstream);

struct WeightedPart {
    const Matrix* grad;  // b_k x cols
    double weight;
};

// Weighted scatter-sum of per-length gradients into a full b_m x cols matrix.
Matrix accumulate_W_grad(std::size_t b_m, std::size_t cols, const std::vector<WeightedPart>& parts);

}  // namespace nhl
