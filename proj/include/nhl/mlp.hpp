#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nhl/matrix.hpp"

namespace nhl {

// MLP feature extractor. Hidden layers use tanh, the final layer is linear.
// dims = [d] is the identity passthrough (no layers).
struct MlpParams {
    std::vector<Matrix> weights;  // layer i: out x in
    std::vector<Matrix> biases;   // layer i: 1 x out

    std::size_t num_layers() const { return weights.size(); }
    std::size_t input_dim() const { return weights.empty() ? passthrough_dim : weights.front().cols; }
    std::size_t output_dim() const { return weights.empty() ? passthrough_dim : weights.back().rows; }

    std::size_t passthrough_dim = 0;  // used only when weights is empty
};

struct MlpGrads {
    std::vector<Matrix> weights;
    std::vector<Matrix> biases;
};

struct ForwardCache {
    Matrix input;                    // B x d
    std::vector<Matrix> activations; // per layer output (post-activation)
};

// Adam moments for an ordered list of tensors.
struct AdamState {
    std::vector<Matrix> m1;
    std::vector<Matrix> m2;
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

MlpParams init_mlp(const std::vector<std::size_t>& dims, std::uint64_t seed);

std::pair<Matrix, ForwardCache> mlp_forward(const MlpParams& p, const Matrix& x);

MlpGrads mlp_backward(const MlpParams& p, const ForwardCache& cache, const Matrix& upstream);

AdamState make_adam_state(const std::vector<const Matrix*>& params);

// One bias-corrected Adam update; `names` label tensors in error messages.
void adam_step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
               AdamState& state, double lr, const std::vector<std::string>& names);

// Convenience wrapper over a backbone-only parameter set.
void adam_step(MlpParams& p, const MlpGrads& g, AdamState& state, double lr);

}  // namespace nhl
