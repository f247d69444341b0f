#pragma once

#include <cstdint>
#include <vector>

#include "nhl/matrix.hpp"

namespace nhl {

struct LossResult {
    double value = 0.0;
    Matrix grad;  // same shape as the relaxed code batch the loss was given
};

// C rows of +-1 targets, one per class. When b is a power of two and
// C <= 2b the rows come from the Sylvester Hadamard matrix and its
// negation, giving pairwise Hamming distance exactly b/2. Otherwise the
// rows are Bernoulli(0.5), resampled to stay pairwise distinct.
Matrix gen_hash_centers(std::uint32_t num_classes, std::uint32_t b, std::uint64_t seed);

// Bitwise BCE between p = (1+u)/2 and the class center target, with p
// clamped to [1e-7, 1-1e-7], plus quant_weight * mean((|u|-1)^2).
LossResult central_loss(const Matrix& u, const std::vector<std::uint32_t>& labels,
                        const Matrix& centers, double quant_weight);

// Contrastive pair loss over all unordered in-batch pairs of relaxed
// codes: similar pairs pay their squared distance, dissimilar pairs pay
// max(0, margin*b - d), averaged over the pair count, plus the same
// quantization term.
LossResult pairwise_loss(const Matrix& u, const std::vector<std::uint32_t>& labels, double margin,
                         double quant_weight);

// Cascade self-distillation: pulls each sample's normalized in-batch
// similarity row at the short length toward the stop-gradiented row at
// the next length. Gradient flows into u_k only.
LossResult lcs_loss(const Matrix& u_k, const Matrix& u_next, double epsilon = 1e-12);

// Same loss computed from precomputed similarity matrices sim_k = U_k U_k^T
// and sim_next = U_next U_next^T; u_k is still needed for the gradient.
LossResult lcs_from_sims(const Matrix& sim_k, const Matrix& sim_next, const Matrix& u_k,
                         double epsilon = 1e-12);

// Similarity matrices U_k U_k^T for every length prefix of u, built in one
// incremental pass over the columns.
std::vector<Matrix> nested_similarities(const Matrix& u, const std::vector<std::uint32_t>& lengths);

}  // namespace nhl
