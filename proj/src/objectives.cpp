#include "nhl/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "nhl/errors.hpp"

namespace nhl {

namespace {

constexpr double kProbClamp = 1e-7;

bool is_power_of_two(std::uint32_t x) { return x != 0 && (x & (x - 1)) == 0; }

Matrix sylvester_hadamard(std::uint32_t b) {
    Matrix h(1, 1);
    h.at(0, 0) = 1.0;
    while (h.rows < b) {
        const std::size_t n = h.rows;
        Matrix next(2 * n, 2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const double v = h.at(i, j);
                next.at(i, j) = v;
                next.at(i, j + n) = v;
                next.at(i + n, j) = v;
                next.at(i + n, j + n) = -v;
            }
        }
        h = std::move(next);
    }
    return h;
}

}  // namespace

Matrix gen_hash_centers(std::uint32_t num_classes, std::uint32_t b, std::uint64_t seed) {
    if (num_classes < 2) throw config_error("gen_hash_centers: need at least 2 classes");
    if (b < 1) throw config_error("gen_hash_centers: code length must be >= 1");

    Matrix centers(num_classes, b);
    if (is_power_of_two(b) && num_classes <= 2 * b) {
        const Matrix h = sylvester_hadamard(b);
        for (std::uint32_t c = 0; c < num_classes; ++c) {
            const double sign = c < b ? 1.0 : -1.0;
            const std::size_t src = c % b;
            for (std::uint32_t j = 0; j < b; ++j) centers.at(c, j) = sign * h.at(src, j);
        }
        return centers;
    }

    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    std::set<std::vector<double>> used;
    for (std::uint32_t c = 0; c < num_classes; ++c) {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            std::vector<double> row(b);
            for (std::uint32_t j = 0; j < b; ++j) row[j] = coin(rng) ? 1.0 : -1.0;
            if (used.insert(row).second) {
                std::copy(row.begin(), row.end(), centers.row(c));
                placed = true;
            }
        }
        if (!placed) {
            throw config_error("gen_hash_centers: could not sample " +
                               std::to_string(num_classes) + " distinct centers at b=" +
                               std::to_string(b) + "; use a larger code length");
        }
    }
    return centers;
}

LossResult central_loss(const Matrix& u, const std::vector<std::uint32_t>& labels,
                        const Matrix& centers, double quant_weight) {
    if (u.rows != labels.size()) throw std::invalid_argument("central_loss: label count mismatch");
    if (u.cols != centers.cols) throw std::invalid_argument("central_loss: code length mismatch");
    for (std::uint32_t y : labels) {
        if (y >= centers.rows) throw data_error("central_loss: label out of range");
    }
    const double inv_n = 1.0 / static_cast<double>(u.rows * u.cols);
    LossResult res;
    res.grad = Matrix(u.rows, u.cols, 0.0);
    double bce = 0.0, quant = 0.0;
    for (std::size_t i = 0; i < u.rows; ++i) {
        const double* urow = u.row(i);
        const double* crow = centers.row(labels[i]);
        double* grow = res.grad.row(i);
        for (std::size_t j = 0; j < u.cols; ++j) {
            const double uv = urow[j];
            const double t = 0.5 * (1.0 + crow[j]);
            const double p_raw = 0.5 * (1.0 + uv);
            const double p = std::clamp(p_raw, kProbClamp, 1.0 - kProbClamp);
            bce += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
            double g = 0.0;
            if (p_raw > kProbClamp && p_raw < 1.0 - kProbClamp) {
                g = 0.5 * (-t / p + (1.0 - t) / (1.0 - p));
            }
            const double au = std::abs(uv) - 1.0;
            quant += au * au;
            const double sgn = uv > 0.0 ? 1.0 : (uv < 0.0 ? -1.0 : 0.0);
            grow[j] = inv_n * (g + quant_weight * 2.0 * au * sgn);
        }
    }
    res.value = inv_n * (bce + quant_weight * quant);
    return res;
}

LossResult pairwise_loss(const Matrix& u, const std::vector<std::uint32_t>& labels, double margin,
                         double quant_weight) {
    if (u.rows != labels.size()) throw std::invalid_argument("pairwise_loss: label count mismatch");
    if (u.rows < 2) throw std::invalid_argument("pairwise_loss: batch must hold at least 2 samples");
    const std::size_t b = u.cols;
    const double pair_count = 0.5 * static_cast<double>(u.rows) * static_cast<double>(u.rows - 1);
    const double inv_p = 1.0 / pair_count;
    const double threshold = margin * static_cast<double>(b);

    LossResult res;
    res.grad = Matrix(u.rows, u.cols, 0.0);
    double pair_term = 0.0;
    for (std::size_t i = 0; i < u.rows; ++i) {
        for (std::size_t j = i + 1; j < u.rows; ++j) {
            const double* ui = u.row(i);
            const double* uj = u.row(j);
            double dist = 0.0;
            for (std::size_t c = 0; c < b; ++c) {
                const double d = ui[c] - uj[c];
                dist += d * d;
            }
            const bool similar = labels[i] == labels[j];
            if (similar) {
                pair_term += dist;
                double* gi = res.grad.row(i);
                double* gj = res.grad.row(j);
                for (std::size_t c = 0; c < b; ++c) {
                    const double d = 2.0 * (ui[c] - uj[c]) * inv_p;
                    gi[c] += d;
                    gj[c] -= d;
                }
            } else if (dist < threshold) {
                // hinge active; at exact equality the pair contributes zero
                pair_term += threshold - dist;
                double* gi = res.grad.row(i);
                double* gj = res.grad.row(j);
                for (std::size_t c = 0; c < b; ++c) {
                    const double d = 2.0 * (ui[c] - uj[c]) * inv_p;
                    gi[c] -= d;
                    gj[c] += d;
                }
            }
        }
    }
    double quant = 0.0;
    const double inv_n = 1.0 / static_cast<double>(u.rows * u.cols);
    for (std::size_t i = 0; i < u.data.size(); ++i) {
        const double uv = u.data[i];
        const double au = std::abs(uv) - 1.0;
        quant += au * au;
        const double sgn = uv > 0.0 ? 1.0 : (uv < 0.0 ? -1.0 : 0.0);
        res.grad.data[i] += quant_weight * 2.0 * au * sgn * inv_n;
    }
    res.value = pair_term * inv_p + quant_weight * quant * inv_n;
    return res;
}

std::vector<Matrix> nested_similarities(const Matrix& u,
                                        const std::vector<std::uint32_t>& lengths) {
    if (!lengths.empty() && lengths.back() > u.cols) {
        throw std::invalid_argument("nested_similarities: length exceeds code width");
    }
    std::vector<Matrix> sims;
    sims.reserve(lengths.size());
    const std::size_t n = u.rows;
    Matrix cur(n, n, 0.0);
    std::size_t done = 0;
    for (std::uint32_t b : lengths) {
        for (std::size_t i = 0; i < n; ++i) {
            const double* ui = u.row(i);
            double* crow = cur.row(i);
            for (std::size_t j = 0; j < n; ++j) {
                const double* uj = u.row(j);
                double acc = 0.0;
                for (std::size_t c = done; c < b; ++c) acc += ui[c] * uj[c];
                crow[j] += acc;
            }
        }
        done = b;
        sims.push_back(cur);
    }
    return sims;
}

LossResult lcs_from_sims(const Matrix& sim_k, const Matrix& sim_next, const Matrix& u_k,
                         double epsilon) {
    const std::size_t n = u_k.rows;
    if (sim_k.rows != n || sim_k.cols != n || sim_next.rows != n || sim_next.cols != n) {
        throw std::invalid_argument("lcs_from_sims: similarity shape mismatch");
    }
    const double inv_b2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));

    LossResult res;
    Matrix sim_grad(n, n, 0.0);
    std::vector<double> rhat(n), shat(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = sim_k.row(i);
        const double* s = sim_next.row(i);
        double rn = 0.0, sn = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            rn += r[j] * r[j];
            sn += s[j] * s[j];
        }
        const bool floored = std::sqrt(rn) < epsilon;
        rn = std::max(std::sqrt(rn), epsilon);
        sn = std::max(std::sqrt(sn), epsilon);
        double err = 0.0, dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            rhat[j] = r[j] / rn;
            shat[j] = s[j] / sn;
            const double e = rhat[j] - shat[j];
            err += e * e;
            dot += e * rhat[j];
        }
        res.value += err * inv_b2;
        // dL/dr through the normalization; the teacher row is constant.
        // At the epsilon floor the divisor is the constant epsilon.
        double* grow = sim_grad.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            const double e = rhat[j] - shat[j];
            grow[j] = floored ? 2.0 * inv_b2 * e / epsilon
                              : 2.0 * inv_b2 * (e - dot * rhat[j]) / rn;
        }
    }
    // sim_k = U U^T, so both appearances of U contribute
    Matrix combined(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            combined.at(i, j) = sim_grad.at(i, j) + sim_grad.at(j, i);
        }
    }
    res.grad = matmul(combined, u_k);
    return res;
}

LossResult lcs_loss(const Matrix& u_k, const Matrix& u_next, double epsilon) {
    if (u_k.rows != u_next.rows) throw std::invalid_argument("lcs_loss: batch size mismatch");
    const Matrix sim_k = matmul_nt(u_k, u_k);
    const Matrix sim_next = matmul_nt(u_next, u_next);
    return lcs_from_sims(sim_k, sim_next, u_k, epsilon);
}

}  // namespace nhl
