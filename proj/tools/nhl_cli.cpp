#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nhl/errors.hpp"
#include "nhl/objectives.hpp"
#include "nhl/retrieval.hpp"
#include "nhl/run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

nhl::SimilarityFn similarity_for(const nhl::RunConfig& cfg) {
    if (cfg.data.multilabel) {
        return [](std::uint32_t a, std::uint32_t b) { return nhl::is_similar_multilabel(a, b); };
    }
    return [](std::uint32_t a, std::uint32_t b) { return nhl::is_similar(a, b); };
}

std::size_t effective_k(std::size_t k, std::size_t db_size) {
    return (k == 0 || k > db_size) ? db_size : k;
}

void write_metrics(const std::vector<nhl::EpochStats>& stats, const fs::path& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw nhl::data_error("cannot open for writing: " + path.string());
    for (const auto& s : stats) os << nhl::epoch_stats_to_json(s) << '\n';
}

// Per-length mAP using each length's own checkpoint.
std::vector<double> eval_lengths(const nhl::TrainResult& result, const nhl::RunConfig& cfg,
                                 const nhl::Dataset& ds, const nhl::Split& split) {
    std::vector<double> maps;
    const auto similar = similarity_for(cfg);
    for (const auto& ckpt : result.checkpoints.per_length) {
        const auto q = nhl::encode(ckpt, ds, split.query_idx, ckpt.target_length);
        const auto db = nhl::encode(ckpt, ds, split.database_idx, ckpt.target_length);
        maps.push_back(nhl::map_at_k(q, db, similar, effective_k(cfg.eval.k, db.n)));
    }
    return maps;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_path) {
    const nhl::RunConfig cfg = nhl::load_run_config(config_path);
    const nhl::Dataset ds = nhl::gen_synthetic(cfg.data.num_classes, cfg.data.per_class,
                                               cfg.data.dim, cfg.data.cluster_std, cfg.data.seed);
    nhl::save_features(ds, out_path, cfg.data.format);
    std::cout << "wrote " << out_path << ": N=" << ds.features.rows << " d=" << ds.features.cols
              << " C=" << ds.num_classes << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_dir) {
    const nhl::RunConfig cfg = nhl::load_run_config(config_path);
    const nhl::Dataset ds = nhl::load_features(data_path);
    const nhl::Split split =
        nhl::make_split(ds, cfg.data.query_per_class, cfg.data.train_per_class, cfg.data.seed);
    const nhl::TrainResult result = nhl::train(cfg.train, ds, split);

    fs::create_directories(out_dir);
    for (const auto& ckpt : result.checkpoints.per_length) {
        const fs::path path =
            fs::path(out_dir) / ("ckpt_" + std::to_string(ckpt.target_length) + ".nhlc");
        nhl::save_checkpoint(ckpt, path.string());
        std::cout << "checkpoint " << path.string() << " (best epoch " << ckpt.epoch << ")\n";
    }
    write_metrics(result.stats, fs::path(out_dir) / "metrics.jsonl");
    std::cout << "metrics " << (fs::path(out_dir) / "metrics.jsonl").string() << "\n";
    return 0;
}

int cmd_encode(const std::string& checkpoint_path, const std::string& config_path,
               const std::string& data_path, const std::string& part, const std::string& out_path,
               std::uint32_t length) {
    const nhl::RunConfig cfg = nhl::load_run_config(config_path);
    const nhl::Dataset ds = nhl::load_features(data_path);
    const nhl::Split split =
        nhl::make_split(ds, cfg.data.query_per_class, cfg.data.train_per_class, cfg.data.seed);
    const nhl::Checkpoint ckpt = nhl::load_checkpoint(checkpoint_path);
    const std::uint32_t b = length == 0 ? ckpt.target_length : length;

    const std::vector<std::size_t>* idx = nullptr;
    if (part == "database") {
        idx = &split.database_idx;
    } else if (part == "query") {
        idx = &split.query_idx;
    } else if (part == "train") {
        idx = &split.train_idx;
    } else {
        throw nhl::config_error("unknown part '" + part + "' (expected database|query|train)");
    }
    const nhl::CodeDatabase codes = nhl::encode(ckpt, ds, *idx, b);
    nhl::save_codes(codes, out_path);
    std::cout << "wrote " << out_path << ": n=" << codes.n << " b=" << codes.bits << "\n";
    return 0;
}

int cmd_eval(const std::string& query_path, const std::string& db_path, std::size_t k,
             bool multilabel) {
    const nhl::CodeDatabase q = nhl::load_codes(query_path);
    const nhl::CodeDatabase db = nhl::load_codes(db_path);
    if (q.bits != db.bits) {
        throw nhl::config_error("eval: query codes are " + std::to_string(q.bits) +
                                " bits but database codes are " + std::to_string(db.bits));
    }
    nhl::SimilarityFn similar =
        multilabel ? nhl::SimilarityFn([](std::uint32_t a, std::uint32_t b) {
            return nhl::is_similar_multilabel(a, b);
        })
                   : nhl::SimilarityFn(
                         [](std::uint32_t a, std::uint32_t b) { return nhl::is_similar(a, b); });
    const std::size_t kk = effective_k(k, db.n);
    const double map = nhl::map_at_k(q, db, similar, kk);
    const double prec = nhl::precision_at_k(q, db, similar, kk);
    std::cout << "mAP@" << (kk == db.n ? std::string("ALL") : std::to_string(kk)) << " = " << map
              << "\nprecision@" << kk << " = " << prec << "\n";
    json j;
    j["map"] = map;
    j["precision"] = prec;
    j["k"] = kk;
    j["queries"] = q.n;
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& data_path,
               const std::string& out_dir, bool singles) {
    const nhl::RunConfig cfg = nhl::load_run_config(config_path);
    const nhl::Dataset ds = nhl::load_features(data_path);
    const nhl::Split split =
        nhl::make_split(ds, cfg.data.query_per_class, cfg.data.train_per_class, cfg.data.seed);

    std::vector<nhl::Variant> variants{nhl::Variant::full, nhl::Variant::basic,
                                       nhl::Variant::no_dynamic, nhl::Variant::no_lcs};
    std::vector<std::string> row_names;
    std::vector<std::vector<double>> rows;
    for (nhl::Variant v : variants) {
        nhl::RunConfig rc = cfg;
        rc.train.variant = v;
        const nhl::TrainResult result = nhl::train(rc.train, ds, split);
        rows.push_back(eval_lengths(result, rc, ds, split));
        row_names.push_back(nhl::variant_name(v));
    }
    if (singles) {
        std::vector<double> row(cfg.train.lengths.size(), 0.0);
        for (std::size_t k = 0; k < cfg.train.lengths.size(); ++k) {
            nhl::RunConfig rc = cfg;
            rc.train.variant = nhl::Variant::single_length;
            rc.train.single_index = k;
            const nhl::TrainResult result = nhl::train(rc.train, ds, split);
            row[k] = eval_lengths(result, rc, ds, split).at(0);
        }
        rows.push_back(std::move(row));
        row_names.push_back("single");
    }

    fs::create_directories(out_dir);
    const fs::path csv_path = fs::path(out_dir) / "ablation.csv";
    std::ofstream csv(csv_path, std::ios::trunc);
    csv << "variant";
    for (std::uint32_t b : cfg.train.lengths) csv << ",map_" << b;
    csv << "\n";
    std::printf("%-8s", "variant");
    for (std::uint32_t b : cfg.train.lengths) std::printf(" %8u", b);
    std::printf("\n");
    for (std::size_t r = 0; r < rows.size(); ++r) {
        csv << row_names[r];
        std::printf("%-8s", row_names[r].c_str());
        for (double v : rows[r]) {
            csv << "," << v;
            std::printf(" %8.4f", v);
        }
        csv << "\n";
        std::printf("\n");
    }
    std::cout << "wrote " << csv_path.string() << "\n";
    return 0;
}

int cmd_bench_speed(const std::string& config_path, const std::string& data_path) {
    const nhl::RunConfig cfg = nhl::load_run_config(config_path);
    const nhl::Dataset ds = nhl::load_features(data_path);
    const nhl::Split split =
        nhl::make_split(ds, cfg.data.query_per_class, cfg.data.train_per_class, cfg.data.seed);
    const nhl::SpeedReport report = nhl::bench_speed(cfg.train, ds, split);
    std::cout << "multi-length training: " << report.t_nhl << " s\n";
    for (std::size_t k = 0; k < report.t_single.size(); ++k) {
        std::cout << "single length " << cfg.train.lengths[k] << ": " << report.t_single[k]
                  << " s\n";
    }
    std::cout << "sum of single-length runs: " << report.t_single_total << " s\n";
    std::cout << "speedup ratio: " << report.ratio << "x\n";
    if (report.peak_rss_mib > 0.0) {
        std::cout << "peak rss: " << report.peak_rss_mib << " MiB\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nested multi-length hashing trainer and Hamming retrieval evaluator"};
    app.require_subcommand(1);

    std::string config_path, data_path, out_path, checkpoint_path, part = "database";
    std::string query_path, db_path;
    std::size_t k = 0;
    std::uint32_t length = 0;
    bool multilabel = false, singles = false;

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic labeled dataset");
    gen->add_option("--config", config_path, "JSON configuration file")->required();
    gen->add_option("--out", out_path, "Output dataset path")->required();

    auto* tr = app.add_subcommand("train", "Train checkpoints for every configured length");
    tr->add_option("--config", config_path)->required();
    tr->add_option("--data", data_path)->required();
    tr->add_option("--out", out_path, "Output directory")->required();

    auto* enc = app.add_subcommand("encode", "Encode a split part to packed binary codes");
    enc->add_option("--checkpoint", checkpoint_path)->required();
    enc->add_option("--config", config_path)->required();
    enc->add_option("--data", data_path)->required();
    enc->add_option("--part", part, "database|query|train");
    enc->add_option("--out", out_path)->required();
    enc->add_option("--length", length, "Code length (default: checkpoint target)");

    auto* ev = app.add_subcommand("eval", "Hamming-ranked mAP@K and precision@K");
    ev->add_option("--query", query_path)->required();
    ev->add_option("--db", db_path)->required();
    ev->add_option("--k", k, "Top-K cutoff; 0 means ALL");
    ev->add_flag("--multilabel", multilabel, "Treat labels as bitmasks sharing a bit");

    auto* ab = app.add_subcommand("ablate", "Compare full/basic/no_D/no_L variants");
    ab->add_option("--config", config_path)->required();
    ab->add_option("--data", data_path)->required();
    ab->add_option("--out", out_path)->required();
    ab->add_flag("--singles", singles, "Also train one single-length model per length");

    auto* bench = app.add_subcommand("bench-speed", "Multi-length vs per-length training time");
    bench->add_option("--config", config_path)->required();
    bench->add_option("--data", data_path)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(config_path, out_path);
        if (tr->parsed()) return cmd_train(config_path, data_path, out_path);
        if (enc->parsed())
            return cmd_encode(checkpoint_path, config_path, data_path, part, out_path, length);
        if (ev->parsed()) return cmd_eval(query_path, db_path, k, multilabel);
        if (ab->parsed()) return cmd_ablate(config_path, data_path, out_path, singles);
        if (bench->parsed()) return cmd_bench_speed(config_path, data_path);
    } catch (const nhl::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const nhl::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const nhl::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
