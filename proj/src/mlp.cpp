#include "nhl/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "nhl/errors.hpp"

namespace nhl {

MlpParams init_mlp(const std::vector<std::size_t>& dims, std::uint64_t seed) {
    if (dims.empty()) throw config_error("init_mlp: dims must not be empty");
    for (std::size_t d : dims) {
        if (d == 0) throw config_error("init_mlp: zero dimension");
    }
    MlpParams p;
    p.passthrough_dim = dims.front();
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const std::size_t in = dims[i], out = dims[i + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Matrix w(out, in);
        for (double& v : w.data) v = dist(rng);
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(1, out, 0.0);
    }
    return p;
}

std::pair<Matrix, ForwardCache> mlp_forward(const MlpParams& p, const Matrix& x) {
    if (x.cols != p.input_dim()) {
        throw std::invalid_argument("mlp_forward: input dim mismatch");
    }
    ForwardCache cache;
    cache.input = x;
    Matrix cur = x;
    for (std::size_t i = 0; i < p.num_layers(); ++i) {
        Matrix z = matmul_nt(cur, p.weights[i]);
        const double* b = p.biases[i].row(0);
        for (std::size_t r = 0; r < z.rows; ++r) {
            double* row = z.row(r);
            for (std::size_t c = 0; c < z.cols; ++c) row[c] += b[c];
        }
        const bool hidden = i + 1 < p.num_layers();
        cur = hidden ? tanh_map(z) : std::move(z);
        cache.activations.push_back(cur);
    }
    return {cur, std::move(cache)};
}

MlpGrads mlp_backward(const MlpParams& p, const ForwardCache& cache, const Matrix& upstream) {
    if (cache.activations.size() != p.num_layers()) {
        throw std::invalid_argument("mlp_backward: cache does not match params");
    }
    if (p.num_layers() > 0 && (upstream.rows != cache.input.rows ||
                               upstream.cols != p.output_dim())) {
        throw std::invalid_argument("mlp_backward: upstream shape mismatch");
    }
    MlpGrads g;
    g.weights.resize(p.num_layers());
    g.biases.resize(p.num_layers());
    Matrix delta = upstream;  // dL/dz of the current layer (final layer is linear)
    for (std::size_t i = p.num_layers(); i-- > 0;) {
        if (i + 1 < p.num_layers()) {
            // chain through the tanh applied at this hidden layer
            const Matrix dact = tanh_deriv(cache.activations[i]);
            for (std::size_t j = 0; j < delta.data.size(); ++j) delta.data[j] *= dact.data[j];
        }
        const Matrix& layer_in = (i == 0) ? cache.input : cache.activations[i - 1];
        g.weights[i] = matmul_tn(delta, layer_in);
        Matrix bg(1, delta.cols, 0.0);
        for (std::size_t r = 0; r < delta.rows; ++r) {
            const double* row = delta.row(r);
            for (std::size_t c = 0; c < delta.cols; ++c) bg.data[c] += row[c];
        }
        g.biases[i] = std::move(bg);
        if (i > 0) delta = matmul(delta, p.weights[i]);
    }
    return g;
}

AdamState make_adam_state(const std::vector<const Matrix*>& params) {
    AdamState s;
    for (const Matrix* p : params) {
        s.m1.emplace_back(p->rows, p->cols, 0.0);
        s.m2.emplace_back(p->rows, p->cols, 0.0);
    }
    return s;
}

void adam_step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
               AdamState& state, double lr, const std::vector<std::string>& names) {
    if (params.size() != grads.size() || params.size() != state.m1.size()) {
        throw std::invalid_argument("adam_step: tensor count mismatch");
    }
    for (std::size_t t = 0; t < grads.size(); ++t) {
        if (!grads[t]->same_shape(*params[t])) {
            throw std::invalid_argument("adam_step: gradient shape mismatch");
        }
        if (!all_finite(*grads[t])) {
            const std::string name = t < names.size() ? names[t] : std::to_string(t);
            throw numeric_error("adam_step: non-finite gradient in " + name);
        }
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t t = 0; t < params.size(); ++t) {
        Matrix& w = *params[t];
        const Matrix& g = *grads[t];
        Matrix& m1 = state.m1[t];
        Matrix& m2 = state.m2[t];
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            m1.data[i] = state.beta1 * m1.data[i] + (1.0 - state.beta1) * g.data[i];
            m2.data[i] = state.beta2 * m2.data[i] + (1.0 - state.beta2) * g.data[i] * g.data[i];
            const double mhat = m1.data[i] / bc1;
            const double vhat = m2.data[i] / bc2;
            w.data[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

void adam_step(MlpParams& p, const MlpGrads& g, AdamState& state, double lr) {
    std::vector<Matrix*> params;
    std::vector<const Matrix*> grads;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < p.num_layers(); ++i) {
        params.push_back(&p.weights[i]);
        grads.push_back(&g.weights[i]);
        names.push_back("layer " + std::to_string(i) + " weight");
        params.push_back(&p.biases[i]);
        grads.push_back(&g.biases[i]);
        names.push_back("layer " + std::to_string(i) + " bias");
    }
    adam_step(params, grads, state, lr, names);
}

}  // namespace nhl
