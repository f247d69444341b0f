#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <stdexcept>

#include "nhl/dataset.hpp"
#include "nhl/errors.hpp"
#include "nhl/objectives.hpp"
#include "nhl/retrieval.hpp"
#include "nhl/trainer.hpp"
#include "nhl/weighting.hpp"

namespace py = pybind11;

namespace {

nhl::Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
    nhl::Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::memcpy(m.data.data(), a.data(), m.data.size() * sizeof(double));
    return m;
}

py::array_t<double> from_matrix(const nhl::Matrix& m) {
    py::array_t<double> a({m.rows, m.cols});
    std::memcpy(a.mutable_data(), m.data.data(), m.data.size() * sizeof(double));
    return a;
}

}  // namespace

PYBIND11_MODULE(_nhl, mod) {
    mod.doc() = "nested multi-length hashing: training, encoding and retrieval";

    py::register_exception<nhl::config_error>(mod, "ConfigError");
    py::register_exception<nhl::data_error>(mod, "DataError");
    py::register_exception<nhl::numeric_error>(mod, "NumericError");

    py::class_<nhl::Dataset>(mod, "Dataset")
        .def_property_readonly("features",
                               [](const nhl::Dataset& d) { return from_matrix(d.features); })
        .def_property_readonly("labels", [](const nhl::Dataset& d) { return d.labels; })
        .def_property_readonly("num_classes", [](const nhl::Dataset& d) { return d.num_classes; });

    py::class_<nhl::Split>(mod, "Split")
        .def_readonly("query_idx", &nhl::Split::query_idx)
        .def_readonly("database_idx", &nhl::Split::database_idx)
        .def_readonly("train_idx", &nhl::Split::train_idx);

    py::enum_<nhl::Variant>(mod, "Variant")
        .value("full", nhl::Variant::full)
        .value("basic", nhl::Variant::basic)
        .value("no_dynamic", nhl::Variant::no_dynamic)
        .value("no_lcs", nhl::Variant::no_lcs)
        .value("single_length", nhl::Variant::single_length);

    py::enum_<nhl::ObjectiveKind>(mod, "Objective")
        .value("central", nhl::ObjectiveKind::central)
        .value("pairwise", nhl::ObjectiveKind::pairwise);

    py::class_<nhl::TrainConfig>(mod, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("lengths", &nhl::TrainConfig::lengths)
        .def_readwrite("epochs", &nhl::TrainConfig::epochs)
        .def_readwrite("batch_size", &nhl::TrainConfig::batch_size)
        .def_readwrite("lr", &nhl::TrainConfig::lr)
        .def_readwrite("lam", &nhl::TrainConfig::lambda)
        .def_readwrite("objective", &nhl::TrainConfig::objective)
        .def_readwrite("quant_weight", &nhl::TrainConfig::quant_weight)
        .def_readwrite("margin", &nhl::TrainConfig::margin)
        .def_readwrite("seed", &nhl::TrainConfig::seed)
        .def_readwrite("variant", &nhl::TrainConfig::variant)
        .def_readwrite("single_index", &nhl::TrainConfig::single_index)
        .def_readwrite("hidden_dims", &nhl::TrainConfig::hidden_dims)
        .def_readwrite("feature_dim", &nhl::TrainConfig::feature_dim);

    py::class_<nhl::Checkpoint>(mod, "Checkpoint")
        .def_readonly("target_length", &nhl::Checkpoint::target_length)
        .def_readonly("best_loss", &nhl::Checkpoint::best_loss)
        .def_readonly("epoch", &nhl::Checkpoint::epoch);

    py::class_<nhl::EpochStats>(mod, "EpochStats")
        .def_readonly("epoch", &nhl::EpochStats::epoch)
        .def_readonly("task_loss", &nhl::EpochStats::task_loss)
        .def_readonly("lcs_loss", &nhl::EpochStats::lcs_loss)
        .def_readonly("alpha_raw_mean", &nhl::EpochStats::alpha_raw_mean)
        .def_readonly("anti_freq", &nhl::EpochStats::anti_freq)
        .def_readonly("guarantee_violations", &nhl::EpochStats::guarantee_violations)
        .def_readonly("seconds", &nhl::EpochStats::seconds);

    py::class_<nhl::TrainResult>(mod, "TrainResult")
        .def_property_readonly(
            "checkpoints", [](const nhl::TrainResult& r) { return r.checkpoints.per_length; })
        .def_readonly("stats", &nhl::TrainResult::stats);

    py::class_<nhl::CodeDatabase>(mod, "CodeDatabase")
        .def_property_readonly("n", [](const nhl::CodeDatabase& d) { return d.n; })
        .def_property_readonly("bits", [](const nhl::CodeDatabase& d) { return d.bits; })
        .def_property_readonly("labels", [](const nhl::CodeDatabase& d) { return d.labels; })
        .def("signs", [](const nhl::CodeDatabase& d) { return from_matrix(nhl::unpack_codes(d)); });

    mod.def("gen_synthetic", &nhl::gen_synthetic, py::arg("num_classes"), py::arg("per_class"),
            py::arg("dim"), py::arg("cluster_std"), py::arg("seed"));
    mod.def("make_split", &nhl::make_split, py::arg("dataset"), py::arg("query_per_class"),
            py::arg("train_per_class"), py::arg("seed"));
    mod.def(
        "gen_hash_centers",
        [](std::uint32_t c, std::uint32_t b, std::uint64_t seed) {
            return from_matrix(nhl::gen_hash_centers(c, b, seed));
        },
        py::arg("num_classes"), py::arg("bits"), py::arg("seed"));
    mod.def(
        "compute_alphas",
        [](const std::vector<py::array_t<double, py::array::c_style | py::array::forcecast>>&
               grads) {
            nhl::GradSet gs;
            for (const auto& g : grads) gs.g.push_back(to_matrix(g));
            return nhl::compute_alphas(gs);
        },
        py::arg("grads"));
    mod.def("train", &nhl::train, py::arg("config"), py::arg("dataset"), py::arg("split"),
            py::call_guard<py::gil_scoped_release>());
    mod.def("encode", &nhl::encode, py::arg("checkpoint"), py::arg("dataset"), py::arg("indices"),
            py::arg("length"));
    mod.def(
        "map_at_k",
        [](const nhl::CodeDatabase& q, const nhl::CodeDatabase& db, std::size_t k) {
            return nhl::map_at_k(
                q, db, [](std::uint32_t a, std::uint32_t b) { return a == b; }, k);
        },
        py::arg("queries"), py::arg("database"), py::arg("k"),
        "Mean average precision with label-equality similarity; k >= n means all.");
    mod.def("save_checkpoint", &nhl::save_checkpoint, py::arg("checkpoint"), py::arg("path"));
    mod.def("load_checkpoint", &nhl::load_checkpoint, py::arg("path"));
}
