#pragma once

#include <string>

#include "nhl/dataset.hpp"
#include "nhl/trainer.hpp"

namespace nhl {

struct DataConfig {
    std::uint32_t num_classes = 10;
    std::size_t per_class = 1000;
    std::size_t dim = 64;
    double cluster_std = 0.3;
    std::uint64_t seed = 7;
    std::size_t query_per_class = 100;
    std::size_t train_per_class = 500;
    FileFormat format = FileFormat::nhlf;
    bool multilabel = false;  // similarity by shared label bit instead of equality
};

struct EvalConfig {
    std::size_t k = 0;  // 0 selects mAP@ALL
};

// One configuration file drives every command. Unknown keys are rejected.
struct RunConfig {
    DataConfig data;
    TrainConfig train;
    EvalConfig eval;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);
std::string objective_name(ObjectiveKind o);
ObjectiveKind parse_objective(const std::string& name);

}  // namespace nhl
