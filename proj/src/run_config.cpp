#include "nhl/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nhl/errors.hpp"

namespace nhl {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!known.count(it.key())) {
            throw config_error("unknown key '" + it.key() + "' in " + where);
        }
    }
}

template <typename T>
void get_if(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) {
        try {
            out = obj.at(key).get<T>();
        } catch (const json::exception&) {
            throw config_error(std::string("bad value for key '") + key + "'");
        }
    }
}

}  // namespace

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::basic: return "basic";
        case Variant::no_dynamic: return "no_D";
        case Variant::no_lcs: return "no_L";
        case Variant::single_length: return "single";
    }
    return "full";
}

Variant parse_variant(const std::string& name) {
    if (name == "full") return Variant::full;
    if (name == "basic") return Variant::basic;
    if (name == "no_D") return Variant::no_dynamic;
    if (name == "no_L") return Variant::no_lcs;
    if (name == "single") return Variant::single_length;
    throw config_error("unknown variant '" + name + "' (expected full|basic|no_D|no_L|single)");
}

std::string objective_name(ObjectiveKind o) {
    return o == ObjectiveKind::central ? "central" : "pairwise";
}

ObjectiveKind parse_objective(const std::string& name) {
    if (name == "central") return ObjectiveKind::central;
    if (name == "pairwise") return ObjectiveKind::pairwise;
    throw config_error("unknown objective '" + name + "' (expected central|pairwise)");
}

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw config_error("config root must be a JSON object");
    reject_unknown(j, {"data", "backbone", "train", "eval"}, "config root");

    RunConfig cfg;
    if (j.contains("data")) {
        const json& d = j.at("data");
        reject_unknown(d,
                       {"num_classes", "per_class", "dim", "cluster_std", "seed",
                        "query_per_class", "train_per_class", "format", "multilabel"},
                       "data section");
        get_if(d, "num_classes", cfg.data.num_classes);
        get_if(d, "per_class", cfg.data.per_class);
        get_if(d, "dim", cfg.data.dim);
        get_if(d, "cluster_std", cfg.data.cluster_std);
        get_if(d, "seed", cfg.data.seed);
        get_if(d, "query_per_class", cfg.data.query_per_class);
        get_if(d, "train_per_class", cfg.data.train_per_class);
        get_if(d, "multilabel", cfg.data.multilabel);
        if (d.contains("format")) {
            const std::string f = d.at("format").get<std::string>();
            if (f == "nhlf") {
                cfg.data.format = FileFormat::nhlf;
            } else if (f == "csv") {
                cfg.data.format = FileFormat::csv;
            } else {
                throw config_error("unknown data format '" + f + "' (expected nhlf|csv)");
            }
        }
    }
    if (j.contains("backbone")) {
        const json& b = j.at("backbone");
        reject_unknown(b, {"hidden", "feature_dim"}, "backbone section");
        get_if(b, "hidden", cfg.train.hidden_dims);
        get_if(b, "feature_dim", cfg.train.feature_dim);
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        reject_unknown(t,
                       {"lengths", "epochs", "batch_size", "lr", "lambda", "objective",
                        "quant_weight", "margin", "seed", "variant", "single_index"},
                       "train section");
        get_if(t, "lengths", cfg.train.lengths);
        get_if(t, "epochs", cfg.train.epochs);
        get_if(t, "batch_size", cfg.train.batch_size);
        get_if(t, "lr", cfg.train.lr);
        get_if(t, "lambda", cfg.train.lambda);
        get_if(t, "quant_weight", cfg.train.quant_weight);
        get_if(t, "margin", cfg.train.margin);
        get_if(t, "seed", cfg.train.seed);
        get_if(t, "single_index", cfg.train.single_index);
        if (t.contains("objective")) {
            cfg.train.objective = parse_objective(t.at("objective").get<std::string>());
        }
        if (t.contains("variant")) {
            cfg.train.variant = parse_variant(t.at("variant").get<std::string>());
        }
    }
    if (j.contains("eval")) {
        const json& e = j.at("eval");
        reject_unknown(e, {"k"}, "eval section");
        get_if(e, "k", cfg.eval.k);
    }
    validate_config(cfg.train);
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open config: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_run_config(ss.str());
}

}  // namespace nhl
