#include "nhl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include <json.hpp>

#include "nhl/errors.hpp"
#include "nhl/objectives.hpp"

#if defined(__unix__) || defined(__APPLE__)
#include <sys/resource.h>
#endif

namespace nhl {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kAlignTolerance = 1e-9;

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& is, const std::string& what) {
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    if (is.gcount() != 4) throw data_error("checkpoint truncated while reading " + what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

void write_f64s(std::ostream& os, const std::vector<double>& vs) {
    for (double v : vs) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
        os.write(reinterpret_cast<const char*>(buf), 8);
    }
}

void read_f64s(std::istream& is, std::vector<double>& vs, const std::string& what) {
    std::vector<unsigned char> raw(vs.size() * 8);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(is.gcount()) != raw.size()) {
        throw data_error("checkpoint truncated while reading " + what);
    }
    for (std::size_t i = 0; i < vs.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(raw[i * 8 + b]) << (8 * b);
        std::memcpy(&vs[i], &bits, 8);
    }
}

std::vector<std::uint32_t> effective_lengths(const TrainConfig& cfg) {
    if (cfg.variant == Variant::single_length) {
        return {cfg.lengths.at(cfg.single_index)};
    }
    return cfg.lengths;
}

struct BatchSlice {
    Matrix x;
    std::vector<std::uint32_t> labels;
};

BatchSlice take_batch(const Dataset& ds, const std::vector<std::size_t>& order, std::size_t begin,
                      std::size_t count) {
    BatchSlice b;
    b.x = Matrix(count, ds.features.cols);
    b.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t src = order[begin + i];
        std::copy(ds.features.row(src), ds.features.row(src) + ds.features.cols, b.x.row(i));
        b.labels[i] = ds.labels[src];
    }
    return b;
}

double peak_rss_mib() {
#if defined(__unix__) || defined(__APPLE__)
    struct rusage ru{};
    if (getrusage(RUSAGE_SELF, &ru) == 0) {
#if defined(__APPLE__)
        return static_cast<double>(ru.ru_maxrss) / (1024.0 * 1024.0);
#else
        return static_cast<double>(ru.ru_maxrss) / 1024.0;
#endif
    }
#endif
    return 0.0;
}

}  // namespace

void validate_config(const TrainConfig& cfg) {
    if (cfg.lengths.empty()) throw config_error("train config: lengths must not be empty");
    for (std::size_t i = 0; i + 1 < cfg.lengths.size(); ++i) {
        if (cfg.lengths[i] >= cfg.lengths[i + 1]) {
            throw config_error("train config: lengths must be strictly increasing");
        }
    }
    if (cfg.lengths.front() == 0) throw config_error("train config: zero code length");
    if (cfg.batch_size < 2) throw config_error("train config: batch_size must be >= 2");
    if (!(cfg.lr > 0.0)) throw config_error("train config: lr must be positive");
    if (cfg.lambda < 0.0) throw config_error("train config: lambda must be >= 0");
    if (cfg.quant_weight < 0.0) throw config_error("train config: quant_weight must be >= 0");
    if (!(cfg.margin > 0.0)) throw config_error("train config: margin must be positive");
    if (cfg.variant == Variant::single_length && cfg.single_index >= cfg.lengths.size()) {
        throw config_error("train config: single_index out of range");
    }
    if (cfg.feature_dim == 0 && !cfg.hidden_dims.empty()) {
        throw config_error("train config: passthrough backbone cannot have hidden layers");
    }
}

VariantFlags apply_variant(const TrainConfig& cfg) {
    switch (cfg.variant) {
        case Variant::full:
            return {true, true};
        case Variant::basic:
            return {false, false};
        case Variant::no_dynamic:
            return {false, true};
        case Variant::no_lcs:
            return {true, false};
        case Variant::single_length:
            return {false, false};
    }
    return {true, true};
}

TrainResult train(const TrainConfig& cfg, const Dataset& ds, const Split& split) {
    validate_config(cfg);
    validate_dataset(ds);
    validate_split(ds, split);

    const std::vector<std::uint32_t> lengths = effective_lengths(cfg);
    const std::size_t m = lengths.size();
    const VariantFlags flags = apply_variant(cfg);
    const bool use_lcs = flags.lcs && m > 1 && cfg.lambda > 0.0;
    const std::size_t d = ds.features.cols;

    std::vector<std::size_t> dims{d};
    std::size_t feat = d;
    if (cfg.feature_dim != 0) {
        for (std::size_t h : cfg.hidden_dims) dims.push_back(h);
        dims.push_back(cfg.feature_dim);
        feat = cfg.feature_dim;
    }
    MlpParams backbone = init_mlp(dims, cfg.seed);
    NestedHashLayer layer = init_nhl(lengths, feat, cfg.seed + 1);

    std::vector<Matrix> centers;
    if (cfg.objective == ObjectiveKind::central) {
        for (std::size_t k = 0; k < m; ++k) {
            centers.push_back(gen_hash_centers(ds.num_classes, lengths[k], cfg.seed + 1000 + k));
        }
    }

    std::vector<Matrix*> params;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < backbone.num_layers(); ++i) {
        params.push_back(&backbone.weights[i]);
        names.push_back("backbone layer " + std::to_string(i) + " weight");
        params.push_back(&backbone.biases[i]);
        names.push_back("backbone layer " + std::to_string(i) + " bias");
    }
    params.push_back(&layer.W);
    names.push_back("hash layer W");
    AdamState adam = make_adam_state({params.begin(), params.end()});

    TrainResult result;
    for (std::size_t k = 0; k < m; ++k) {
        Checkpoint c;
        c.backbone = backbone;
        c.layer = layer;
        c.target_length = lengths[k];
        c.best_loss = std::numeric_limits<double>::infinity();
        c.epoch = 0;
        result.checkpoints.per_length.push_back(std::move(c));
    }

    for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = Clock::now();
        std::vector<std::size_t> order = split.train_idx;
        std::mt19937_64 shuffle_rng(cfg.seed * 0x9E3779B97F4A7C15ULL + epoch + 1);
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        EpochStats stats;
        stats.epoch = epoch;
        stats.task_loss.assign(m, 0.0);
        stats.lcs_loss.assign(m, 0.0);
        stats.alpha_raw_mean.assign(m, 0.0);
        stats.anti_freq.assign(m, 0.0);
        std::size_t num_batches = 0;

        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - begin);
            if (count < 2) break;  // a lone trailing sample cannot form pairs
            const BatchSlice batch = take_batch(ds, order, begin, count);

            auto [v, cache] = mlp_forward(backbone, batch.x);
            const Matrix u = nhl_forward(layer, v);

            std::vector<Matrix> u_views;
            std::vector<Matrix> task_grads;
            u_views.reserve(m);
            task_grads.reserve(m);
            for (std::size_t k = 0; k < m; ++k) {
                u_views.push_back(slice_cols(u, lengths[k]));
                LossResult loss =
                    cfg.objective == ObjectiveKind::central
                        ? central_loss(u_views[k], batch.labels, centers[k], cfg.quant_weight)
                        : pairwise_loss(u_views[k], batch.labels, cfg.margin, cfg.quant_weight);
                if (!std::isfinite(loss.value)) {
                    throw numeric_error("non-finite task loss at epoch " + std::to_string(epoch) +
                                        " batch " + std::to_string(num_batches) + " length " +
                                        std::to_string(lengths[k]));
                }
                stats.task_loss[k] += loss.value;
                task_grads.push_back(std::move(loss.grad));
            }

            std::vector<Matrix> lcs_grads;
            if (use_lcs) {
                const std::vector<Matrix> sims = nested_similarities(u, lengths);
                for (std::size_t k = 0; k + 1 < m; ++k) {
                    LossResult lcs = lcs_from_sims(sims[k], sims[k + 1], u_views[k]);
                    if (!std::isfinite(lcs.value)) {
                        throw numeric_error("non-finite distillation loss at epoch " +
                                            std::to_string(epoch) + " batch " +
                                            std::to_string(num_batches) + " length " +
                                            std::to_string(lengths[k]));
                    }
                    stats.lcs_loss[k] += lcs.value;
                    lcs_grads.push_back(std::move(lcs.grad));
                }
            }

            const GradSet gs = collect_task_grads(layer, v, u, task_grads);
            std::vector<double> raw =
                flags.weighting ? compute_alphas(gs) : std::vector<double>(m, 1.0);
            const DominationReport report = domination_report(gs, raw);
            for (std::size_t k = 0; k < m; ++k) {
                stats.alpha_raw_mean[k] += raw[k];
                if (report.anti[k]) stats.anti_freq[k] += 1.0;
                if (flags.weighting &&
                    report.inner[k] <
                        -kAlignTolerance * report.total_norm[k] * report.dominant_norm[k]) {
                    stats.guarantee_violations += 1;
                }
            }
            const AlphaWeights alphas = renormalize(std::move(raw));

            // Combined upstream gradient over the full code width; one head
            // backward covers every length by linearity.
            Matrix combined(u.rows, u.cols, 0.0);
            for (std::size_t k = 0; k < m; ++k) {
                const double w = alphas.normalized[k];
                const Matrix& g = task_grads[k];
                for (std::size_t i = 0; i < g.rows; ++i) {
                    const double* src = g.row(i);
                    double* dst = combined.row(i);
                    for (std::size_t c = 0; c < g.cols; ++c) dst[c] += w * src[c];
                }
            }
            if (use_lcs) {
                for (std::size_t k = 0; k + 1 < m; ++k) {
                    const double w = alphas.normalized[k] * cfg.lambda;
                    const Matrix& g = lcs_grads[k];
                    for (std::size_t i = 0; i < g.rows; ++i) {
                        const double* src = g.row(i);
                        double* dst = combined.row(i);
                        for (std::size_t c = 0; c < g.cols; ++c) dst[c] += w * src[c];
                    }
                }
            }

            const HeadGrad hg = head_backward(layer, v, u, m - 1, combined);
            const MlpGrads bg = mlp_backward(backbone, cache, hg.input_grad);

            std::vector<const Matrix*> grads;
            for (std::size_t i = 0; i < backbone.num_layers(); ++i) {
                grads.push_back(&bg.weights[i]);
                grads.push_back(&bg.biases[i]);
            }
            grads.push_back(&hg.w_grad);
            adam_step(params, grads, adam, cfg.lr, names);
            ++num_batches;
        }

        if (num_batches > 0) {
            const double inv = 1.0 / static_cast<double>(num_batches);
            for (std::size_t k = 0; k < m; ++k) {
                stats.task_loss[k] *= inv;
                stats.lcs_loss[k] *= inv;
                stats.alpha_raw_mean[k] *= inv;
                stats.anti_freq[k] *= inv;
            }
        }
        stats.seconds = std::chrono::duration<double>(Clock::now() - t0).count();

        for (std::size_t k = 0; k < m; ++k) {
            Checkpoint& ckpt = result.checkpoints.per_length[k];
            if (stats.task_loss[k] < ckpt.best_loss) {
                ckpt.best_loss = stats.task_loss[k];
                ckpt.epoch = epoch;
                ckpt.backbone = backbone;
                ckpt.layer = layer;
            }
        }
        result.stats.push_back(std::move(stats));
    }
    return result;
}

SpeedReport bench_speed(const TrainConfig& cfg, const Dataset& ds, const Split& split) {
    SpeedReport report;
    {
        const auto t0 = Clock::now();
        train(cfg, ds, split);
        report.t_nhl = std::chrono::duration<double>(Clock::now() - t0).count();
    }
    for (std::size_t k = 0; k < cfg.lengths.size(); ++k) {
        TrainConfig single = cfg;
        single.variant = Variant::single_length;
        single.single_index = k;
        const auto t0 = Clock::now();
        train(single, ds, split);
        report.t_single.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
        report.t_single_total += report.t_single.back();
    }
    report.ratio = report.t_single_total / report.t_nhl;
    report.peak_rss_mib = peak_rss_mib();
    return report;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw data_error("cannot open for writing: " + path);
    os.write("NHLC", 4);
    write_u32(os, 1);
    write_u32(os, static_cast<std::uint32_t>(ckpt.backbone.num_layers()));
    for (std::size_t i = 0; i < ckpt.backbone.num_layers(); ++i) {
        write_u32(os, static_cast<std::uint32_t>(ckpt.backbone.weights[i].rows));
        write_u32(os, static_cast<std::uint32_t>(ckpt.backbone.weights[i].cols));
        write_f64s(os, ckpt.backbone.weights[i].data);
        write_f64s(os, ckpt.backbone.biases[i].data);
    }
    write_u32(os, static_cast<std::uint32_t>(ckpt.layer.W.rows));
    write_u32(os, static_cast<std::uint32_t>(ckpt.layer.W.cols));
    write_u32(os, static_cast<std::uint32_t>(ckpt.layer.lengths.size()));
    for (std::uint32_t b : ckpt.layer.lengths) write_u32(os, b);
    write_f64s(os, ckpt.layer.W.data);
    write_u32(os, ckpt.target_length);
    if (!os) throw data_error("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw data_error("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (is.gcount() != 4 || std::memcmp(magic, "NHLC", 4) != 0) {
        throw data_error(path + ": not an NHLC checkpoint");
    }
    const std::uint32_t version = read_u32(is, "version");
    if (version != 1) throw data_error(path + ": unsupported checkpoint version");
    Checkpoint ckpt;
    const std::uint32_t layers = read_u32(is, "layer count");
    for (std::uint32_t i = 0; i < layers; ++i) {
        const std::uint32_t out = read_u32(is, "layer rows");
        const std::uint32_t in = read_u32(is, "layer cols");
        Matrix w(out, in);
        read_f64s(is, w.data, "layer weights");
        Matrix b(1, out);
        read_f64s(is, b.data, "layer biases");
        ckpt.backbone.weights.push_back(std::move(w));
        ckpt.backbone.biases.push_back(std::move(b));
    }
    const std::uint32_t b_m = read_u32(is, "hash rows");
    const std::uint32_t wcols = read_u32(is, "hash cols");
    const std::uint32_t m = read_u32(is, "length count");
    ckpt.layer.lengths.resize(m);
    for (std::uint32_t i = 0; i < m; ++i) ckpt.layer.lengths[i] = read_u32(is, "length");
    ckpt.layer.W = Matrix(b_m, wcols);
    read_f64s(is, ckpt.layer.W.data, "hash weights");
    ckpt.target_length = read_u32(is, "target length");
    if (layers == 0) ckpt.backbone.passthrough_dim = wcols - 1;
    validate_layer(ckpt.layer);
    return ckpt;
}

std::string epoch_stats_to_json(const EpochStats& s) {
    nlohmann::json j;
    j["epoch"] = s.epoch;
    j["task_loss"] = s.task_loss;
    j["lcs_loss"] = s.lcs_loss;
    j["alpha_raw_mean"] = s.alpha_raw_mean;
    j["anti_freq"] = s.anti_freq;
    j["guarantee_violations"] = s.guarantee_violations;
    j["seconds"] = s.seconds;
    return j.dump();
}

}  // namespace nhl
