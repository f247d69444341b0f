#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>

#include <doctest.h>

#include "nhl/errors.hpp"
#include "nhl/trainer.hpp"

namespace {

nhl::TrainConfig small_config() {
    nhl::TrainConfig cfg;
    cfg.lengths = {4, 8, 16};
    cfg.epochs = 3;
    cfg.batch_size = 16;
    cfg.lr = 1e-3;
    cfg.hidden_dims = {12};
    cfg.feature_dim = 8;
    cfg.seed = 5;
    return cfg;
}

struct Fixture {
    nhl::Dataset ds = nhl::gen_synthetic(4, 30, 8, 0.6, 3);
    nhl::Split split = nhl::make_split(ds, 5, 20, 3);
};

bool same_params(const nhl::Checkpoint& a, const nhl::Checkpoint& b) {
    if (a.layer.W.data != b.layer.W.data || a.layer.lengths != b.layer.lengths) return false;
    if (a.backbone.num_layers() != b.backbone.num_layers()) return false;
    for (std::size_t i = 0; i < a.backbone.num_layers(); ++i) {
        if (a.backbone.weights[i].data != b.backbone.weights[i].data) return false;
        if (a.backbone.biases[i].data != b.backbone.biases[i].data) return false;
    }
    return a.target_length == b.target_length;
}

}  // namespace

TEST_CASE("config validation") {
    nhl::TrainConfig cfg = small_config();
    CHECK_NOTHROW(nhl::validate_config(cfg));

    cfg.lengths = {8, 8, 16};
    CHECK_THROWS_AS(nhl::validate_config(cfg), nhl::config_error);
    cfg = small_config();
    cfg.lengths.clear();
    CHECK_THROWS_AS(nhl::validate_config(cfg), nhl::config_error);
    cfg = small_config();
    cfg.batch_size = 1;
    CHECK_THROWS_AS(nhl::validate_config(cfg), nhl::config_error);
    cfg = small_config();
    cfg.lr = 0.0;
    CHECK_THROWS_AS(nhl::validate_config(cfg), nhl::config_error);
    cfg = small_config();
    cfg.variant = nhl::Variant::single_length;
    cfg.single_index = 3;
    CHECK_THROWS_AS(nhl::validate_config(cfg), nhl::config_error);
}

TEST_CASE("variant flag mapping") {
    nhl::TrainConfig cfg = small_config();
    cfg.variant = nhl::Variant::full;
    CHECK(nhl::apply_variant(cfg).weighting);
    CHECK(nhl::apply_variant(cfg).lcs);
    cfg.variant = nhl::Variant::basic;
    CHECK_FALSE(nhl::apply_variant(cfg).weighting);
    CHECK_FALSE(nhl::apply_variant(cfg).lcs);
    cfg.variant = nhl::Variant::no_dynamic;
    CHECK_FALSE(nhl::apply_variant(cfg).weighting);
    CHECK(nhl::apply_variant(cfg).lcs);
    cfg.variant = nhl::Variant::no_lcs;
    CHECK(nhl::apply_variant(cfg).weighting);
    CHECK_FALSE(nhl::apply_variant(cfg).lcs);
}

TEST_CASE("zero epochs returns initial parameters and no stats") {
    Fixture f;
    nhl::TrainConfig cfg = small_config();
    cfg.epochs = 0;
    const nhl::TrainResult r = nhl::train(cfg, f.ds, f.split);
    CHECK(r.stats.empty());
    REQUIRE(r.checkpoints.per_length.size() == 3);
    // every checkpoint carries the same untouched initial parameters
    CHECK(r.checkpoints.per_length[0].layer.W.data == r.checkpoints.per_length[2].layer.W.data);
    CHECK(r.checkpoints.per_length[0].best_loss == std::numeric_limits<double>::infinity());
}

TEST_CASE("training is deterministic") {
    Fixture f;
    const nhl::TrainConfig cfg = small_config();
    const nhl::TrainResult a = nhl::train(cfg, f.ds, f.split);
    const nhl::TrainResult b = nhl::train(cfg, f.ds, f.split);
    REQUIRE(a.checkpoints.per_length.size() == b.checkpoints.per_length.size());
    for (std::size_t k = 0; k < a.checkpoints.per_length.size(); ++k) {
        CHECK(same_params(a.checkpoints.per_length[k], b.checkpoints.per_length[k]));
        CHECK(a.checkpoints.per_length[k].best_loss == b.checkpoints.per_length[k].best_loss);
    }
    for (std::size_t e = 0; e < a.stats.size(); ++e) {
        CHECK(a.stats[e].task_loss == b.stats[e].task_loss);
        CHECK(a.stats[e].alpha_raw_mean == b.stats[e].alpha_raw_mean);
    }
}

TEST_CASE("variants that disable both mechanisms coincide bit for bit") {
    Fixture f;
    nhl::TrainConfig basic = small_config();
    basic.variant = nhl::Variant::basic;

    // weighting off + lambda 0 turns the lcs-enabled variant into basic
    nhl::TrainConfig no_d = small_config();
    no_d.variant = nhl::Variant::no_dynamic;
    no_d.lambda = 0.0;

    const nhl::TrainResult a = nhl::train(basic, f.ds, f.split);
    const nhl::TrainResult b = nhl::train(no_d, f.ds, f.split);
    for (std::size_t k = 0; k < a.checkpoints.per_length.size(); ++k) {
        CHECK(same_params(a.checkpoints.per_length[k], b.checkpoints.per_length[k]));
    }

    // likewise full with lambda 0 equals the no-distillation variant
    nhl::TrainConfig full0 = small_config();
    full0.lambda = 0.0;
    nhl::TrainConfig no_l = small_config();
    no_l.variant = nhl::Variant::no_lcs;
    const nhl::TrainResult c = nhl::train(full0, f.ds, f.split);
    const nhl::TrainResult d = nhl::train(no_l, f.ds, f.split);
    for (std::size_t k = 0; k < c.checkpoints.per_length.size(); ++k) {
        CHECK(same_params(c.checkpoints.per_length[k], d.checkpoints.per_length[k]));
    }
}

TEST_CASE("basic variant reports unit weights") {
    Fixture f;
    nhl::TrainConfig cfg = small_config();
    cfg.variant = nhl::Variant::basic;
    const nhl::TrainResult r = nhl::train(cfg, f.ds, f.split);
    for (const nhl::EpochStats& s : r.stats) {
        for (double a : s.alpha_raw_mean) CHECK(a == 1.0);
        for (double l : s.lcs_loss) CHECK(l == 0.0);
    }
}

TEST_CASE("single-length variant trains exactly one head") {
    Fixture f;
    nhl::TrainConfig cfg = small_config();
    cfg.variant = nhl::Variant::single_length;
    cfg.single_index = 1;
    const nhl::TrainResult r = nhl::train(cfg, f.ds, f.split);
    REQUIRE(r.checkpoints.per_length.size() == 1);
    CHECK(r.checkpoints.per_length[0].target_length == 8);
    CHECK(r.checkpoints.per_length[0].layer.lengths == std::vector<std::uint32_t>{8});
    for (const nhl::EpochStats& s : r.stats) {
        REQUIRE(s.task_loss.size() == 1);
        CHECK(s.alpha_raw_mean[0] == 1.0);
        CHECK(s.anti_freq[0] == 0.0);
    }
}

TEST_CASE("best checkpoint loss matches the metric minimum") {
    Fixture f;
    nhl::TrainConfig cfg = small_config();
    cfg.epochs = 6;
    const nhl::TrainResult r = nhl::train(cfg, f.ds, f.split);
    for (std::size_t k = 0; k < r.checkpoints.per_length.size(); ++k) {
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_epoch = 0;
        for (const nhl::EpochStats& s : r.stats) {
            if (s.task_loss[k] < best) {
                best = s.task_loss[k];
                best_epoch = s.epoch;
            }
        }
        CHECK(r.checkpoints.per_length[k].best_loss == best);
        CHECK(r.checkpoints.per_length[k].epoch == best_epoch);
    }
}

TEST_CASE("dynamic weighting never lets the update oppose a dominant gradient") {
    Fixture f;
    nhl::TrainConfig cfg = small_config();
    cfg.epochs = 5;
    const nhl::TrainResult r = nhl::train(cfg, f.ds, f.split);
    std::uint64_t total = 0;
    for (const nhl::EpochStats& s : r.stats) total += s.guarantee_violations;
    CHECK(total == 0);
}

TEST_CASE("pairwise objective also trains") {
    Fixture f;
    nhl::TrainConfig cfg = small_config();
    cfg.objective = nhl::ObjectiveKind::pairwise;
    cfg.epochs = 2;
    const nhl::TrainResult r = nhl::train(cfg, f.ds, f.split);
    CHECK(r.stats.size() == 2);
    for (const nhl::EpochStats& s : r.stats) {
        for (double l : s.task_loss) CHECK(l >= 0.0);
        CHECK(s.guarantee_violations == 0);
    }
}

TEST_CASE("checkpoint file round trip") {
    Fixture f;
    nhl::TrainConfig cfg = small_config();
    cfg.epochs = 1;
    const nhl::TrainResult r = nhl::train(cfg, f.ds, f.split);
    const std::string path =
        (std::filesystem::temp_directory_path() / "nhl_test_ckpt.nhlc").string();
    nhl::save_checkpoint(r.checkpoints.per_length[1], path);
    const nhl::Checkpoint back = nhl::load_checkpoint(path);
    CHECK(same_params(back, r.checkpoints.per_length[1]));

    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 12);
    CHECK_THROWS_AS(nhl::load_checkpoint(path), nhl::data_error);
    std::remove(path.c_str());
}

TEST_CASE("epoch metrics serialize with stable keys") {
    nhl::EpochStats s;
    s.epoch = 2;
    s.task_loss = {0.5};
    s.lcs_loss = {0.0};
    s.alpha_raw_mean = {1.0};
    s.anti_freq = {0.25};
    s.seconds = 1.5;
    const std::string j = nhl::epoch_stats_to_json(s);
    for (const char* key : {"\"epoch\"", "\"task_loss\"", "\"lcs_loss\"", "\"alpha_raw_mean\"",
                            "\"anti_freq\"", "\"guarantee_violations\"", "\"seconds\""}) {
        CHECK(j.find(key) != std::string::npos);
    }
}

TEST_CASE("speed report on a single length is near parity") {
    Fixture f;
    nhl::TrainConfig cfg = small_config();
    cfg.lengths = {16};
    cfg.epochs = 8;
    const nhl::SpeedReport r = nhl::bench_speed(cfg, f.ds, f.split);
    CHECK(r.t_nhl > 0.0);
    CHECK(r.t_single_total > 0.0);
    CHECK(r.ratio > 0.5);
    CHECK(r.ratio < 2.0);
}
