#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nhl/dataset.hpp"
#include "nhl/hash_layer.hpp"
#include "nhl/mlp.hpp"
#include "nhl/weighting.hpp"

namespace nhl {

enum class ObjectiveKind { central, pairwise };
enum class Variant { full, basic, no_dynamic, no_lcs, single_length };

struct TrainConfig {
    std::vector<std::uint32_t> lengths{8, 16, 32, 64, 128};
    std::uint32_t epochs = 30;
    std::size_t batch_size = 64;
    double lr = 1e-3;
    double lambda = 1.0;
    ObjectiveKind objective = ObjectiveKind::central;
    double quant_weight = 1e-4;
    double margin = 2.0;
    std::uint64_t seed = 1;
    Variant variant = Variant::full;
    std::size_t single_index = 0;  // which length a single_length run trains

    // Backbone shape. Empty hidden plus feature_dim == 0 selects the
    // identity passthrough (features fed to the hash layer unchanged).
    std::vector<std::size_t> hidden_dims{128};
    std::size_t feature_dim = 64;
};

void validate_config(const TrainConfig& cfg);

struct VariantFlags {
    bool weighting = true;
    bool lcs = true;
};

VariantFlags apply_variant(const TrainConfig& cfg);

// Full parameter snapshot for one target code length.
struct Checkpoint {
    MlpParams backbone;
    NestedHashLayer layer;
    std::uint32_t target_length = 0;
    double best_loss = 0.0;
    std::uint32_t epoch = 0;  // epoch at which best_loss was attained
};

struct CheckpointSet {
    std::vector<Checkpoint> per_length;
};

struct EpochStats {
    std::uint32_t epoch = 0;
    std::vector<double> task_loss;       // per length, epoch mean
    std::vector<double> lcs_loss;        // per length (last entry always 0)
    std::vector<double> alpha_raw_mean;  // per length
    std::vector<double> anti_freq;       // per length, fraction of steps
    std::uint64_t guarantee_violations = 0;  // tolerance-checked, raw alphas
    double seconds = 0.0;
};

struct TrainResult {
    CheckpointSet checkpoints;
    std::vector<EpochStats> stats;
};

TrainResult train(const TrainConfig& cfg, const Dataset& ds, const Split& split);

struct SpeedReport {
    double t_nhl = 0.0;
    std::vector<double> t_single;  // per length
    double t_single_total = 0.0;
    double ratio = 0.0;
    double peak_rss_mib = 0.0;  // best-effort, 0 when unavailable
};

SpeedReport bench_speed(const TrainConfig& cfg, const Dataset& ds, const Split& split);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// One JSON object per epoch, stable key names.
std::string epoch_stats_to_json(const EpochStats& s);

}  // namespace nhl
