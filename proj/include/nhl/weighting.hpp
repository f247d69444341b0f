#pragma once

#include <cstdint>
#include <vector>

#include "nhl/hash_layer.hpp"
#include "nhl/matrix.hpp"

namespace nhl {

// Per-objective gradients on the nested hash-layer parameters. g[i] is the
// gradient of the length-(i+1) task loss w.r.t. the first b_{i+1} rows of W;
// its first b_k rows are the gradient seen by the length-k slice.
struct GradSet {
    std::vector<Matrix> g;

    std::size_t num_objectives() const { return g.size(); }
};

// Dynamic objective weights: raw values from the closed form (raw[0] is
// always 1) and the renormalized values summing to m.
struct AlphaWeights {
    std::vector<double> raw;
    std::vector<double> normalized;
};

// Gradients of the per-length task losses on W, one head backward per
// objective. task_grads[i] is dL_i/dU_i (B x b_{i+1}).
GradSet collect_task_grads(const NestedHashLayer& layer, const Matrix& v, const Matrix& u,
                           const std::vector<Matrix>& task_grads);

// Closed-form pairwise weight protecting the dominant gradient of slice k
// (1-based) against objective i. Returns a value in (0, 1].
double alpha_pair(const Matrix& g_i_k, const Matrix& g_k_k, double alpha_k, std::size_t m,
                  std::size_t k);

// Raw weights, computed sequentially in ascending objective order.
std::vector<double> compute_alphas(const GradSet& gs);

// Scales the raw weights so they sum to the number of objectives.
AlphaWeights renormalize(std::vector<double> raw);

struct DominationReport {
    // Per slice k: inner product between the weighted total gradient on
    // W^(k) and the dominant gradient, plus both norms.
    std::vector<double> inner;
    std::vector<double> total_norm;
    std::vector<double> dominant_norm;
    std::vector<bool> anti;  // inner < 0; zero counts as align-domination
    double anti_fraction = 0.0;
};

DominationReport domination_report(const GradSet& gs, const std::vector<double>& alphas);

}  // namespace nhl
