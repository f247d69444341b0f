#include "nhl/weighting.hpp"

#include <algorithm>
#include <stdexcept>

namespace nhl {

GradSet collect_task_grads(const NestedHashLayer& layer, const Matrix& v, const Matrix& u,
                           const std::vector<Matrix>& task_grads) {
    if (task_grads.size() != layer.lengths.size()) {
        throw std::invalid_argument("collect_task_grads: one upstream gradient per length expected");
    }
    GradSet gs;
    gs.g.reserve(task_grads.size());
    for (std::size_t i = 0; i < task_grads.size(); ++i) {
        gs.g.push_back(head_weight_grad(layer, v, u, i, task_grads[i]));
    }
    return gs;
}

double alpha_pair(const Matrix& g_i_k, const Matrix& g_k_k, double alpha_k, std::size_t m,
                  std::size_t k) {
    const double inner = flat_inner(g_i_k, g_k_k);
    if (inner >= 0.0) return 1.0;
    const double norm_sq = flat_inner(g_k_k, g_k_k);
    if (norm_sq == 0.0) return 1.0;  // dominant gradient vanished; nothing to protect
    const double denom = static_cast<double>(k) - static_cast<double>(m);  // negative
    const double alpha = alpha_k / denom * norm_sq / inner;
    return std::min(alpha, 1.0);
}

std::vector<double> compute_alphas(const GradSet& gs) {
    const std::size_t m = gs.num_objectives();
    std::vector<double> raw(m, 1.0);
    for (std::size_t i = 1; i < m; ++i) {
        double alpha = 1.0;  // the k == i term is always 1
        for (std::size_t k = 0; k < i; ++k) {
            const Matrix g_i_k = slice_rows(gs.g[i], gs.g[k].rows);
            alpha = std::min(alpha, alpha_pair(g_i_k, gs.g[k], raw[k], m, k + 1));
        }
        raw[i] = alpha;
    }
    return raw;
}

AlphaWeights renormalize(std::vector<double> raw) {
    AlphaWeights w;
    double sum = 0.0;
    for (double a : raw) sum += a;
    const double scale = static_cast<double>(raw.size()) / sum;
    w.normalized.reserve(raw.size());
    for (double a : raw) w.normalized.push_back(a * scale);
    w.raw = std::move(raw);
    return w;
}

DominationReport domination_report(const GradSet& gs, const std::vector<double>& alphas) {
    const std::size_t m = gs.num_objectives();
    if (alphas.size() != m) {
        throw std::invalid_argument("domination_report: one alpha per objective expected");
    }
    DominationReport rep;
    std::size_t anti_count = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t b_k = gs.g[k].rows;
        Matrix total(b_k, gs.g[k].cols, 0.0);
        for (std::size_t i = k; i < m; ++i) {
            const double a = alphas[i];
            const Matrix& gi = gs.g[i];
            for (std::size_t r = 0; r < b_k; ++r) {
                const double* src = gi.row(r);
                double* dst = total.row(r);
                for (std::size_t c = 0; c < total.cols; ++c) dst[c] += a * src[c];
            }
        }
        const double inner = flat_inner(total, gs.g[k]);
        rep.inner.push_back(inner);
        rep.total_norm.push_back(frobenius_norm(total));
        rep.dominant_norm.push_back(frobenius_norm(gs.g[k]));
        const bool anti = inner < 0.0;
        rep.anti.push_back(anti);
        if (anti) ++anti_count;
    }
    rep.anti_fraction = m == 0 ? 0.0 : static_cast<double>(anti_count) / static_cast<double>(m);
    return rep;
}

}  // namespace nhl
