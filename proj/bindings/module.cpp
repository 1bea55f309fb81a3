// Python bindings for the core operations: signal kernels, agreement
// metrics, PCA, parameter averaging/blending, and the pipeline
// subcommands. Numeric surfaces take and return plain lists so the module
// has no numpy dependency.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <stdexcept>

#include "fedshot/config.hpp"
#include "fedshot/errors.hpp"
#include "fedshot/fed.hpp"
#include "fedshot/metrics.hpp"
#include "fedshot/pipeline.hpp"
#include "fedshot/rng.hpp"
#include "fedshot/signal.hpp"

namespace py = pybind11;
using namespace fedshot;

namespace {

ConfusionMatrix matrix_of(const std::vector<std::vector<std::int64_t>>& counts) {
    if (counts.empty()) {
        throw EmptyMatrix("confusion matrix has no rows");
    }
    ConfusionMatrix cm(counts.size());
    for (std::size_t t = 0; t < counts.size(); ++t) {
        if (counts[t].size() != counts.size()) {
            throw InvalidArgument("confusion matrix must be square");
        }
        for (std::size_t p = 0; p < counts[t].size(); ++p) {
            if (counts[t][p] < 0) {
                throw InvalidArgument("confusion counts must be nonnegative");
            }
            cm.add(static_cast<int>(t), static_cast<int>(p),
                   static_cast<std::uint64_t>(counts[t][p]));
        }
    }
    return cm;
}

// A flat vector wrapped as a single-tensor ParamVector, so the federated
// primitives can be exercised without model plumbing.
ParamVector wrap_flat(const std::vector<double>& values) {
    ParamVector pv;
    pv.layout.tensors = {{"p", {static_cast<std::uint32_t>(values.size())}}};
    pv.values = values;
    return pv;
}

ExperimentConfig config_of(const std::string& config_path,
                           const std::map<std::string, std::string>& overrides,
                           const std::string& mode) {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
        cfg = load_config(config_path, cfg);
    }
    for (const auto& [key, value] : overrides) {
        apply_override(cfg, key, value);
    }
    cfg.mode = mode;
    cfg.validate();
    return cfg;
}

} // namespace

PYBIND11_MODULE(_fedshot, m) {
    m.doc() = "federated few-shot EEG seizure-detection core";

    py::register_exception<Error>(m, "FedshotError");

    m.def("resample_linear", &resample_linear, py::arg("samples"),
          py::arg("src_rate"), py::arg("dst_rate"),
          "Linear-interpolation resampling of one channel.");
    m.def("normalize_percentile", &normalize_percentile, py::arg("samples"),
          "Divide by the 95th percentile of absolute values (floored at 1e-8).");

    m.def(
        "balanced_accuracy",
        [](const std::vector<std::vector<std::int64_t>>& counts) {
            return balanced_accuracy(matrix_of(counts));
        },
        py::arg("counts"),
        "Mean per-class recall over classes with support, from a square count "
        "matrix indexed [true][predicted].");
    m.def(
        "cohens_kappa",
        [](const std::vector<std::vector<std::int64_t>>& counts) {
            bool degenerate = false;
            const double k = cohens_kappa(matrix_of(counts), &degenerate);
            return py::make_tuple(k, degenerate);
        },
        py::arg("counts"),
        "Cohen's kappa and a flag marking degenerate marginals (kappa forced "
        "to 0).");
    m.def(
        "weighted_f1",
        [](const std::vector<std::vector<std::int64_t>>& counts) {
            return weighted_f1(matrix_of(counts));
        },
        py::arg("counts"), "Support-weighted mean F1 over classes.");

    m.def(
        "pca2",
        [](const std::vector<std::vector<double>>& rows, std::uint64_t seed) {
            const Pca2Result r = pca2(rows, seed);
            py::dict out;
            out["points"] = r.points;
            out["explained_variance"] = r.explained_variance;
            out["eigenvalues"] = r.eigenvalues;
            out["components"] = r.components;
            return out;
        },
        py::arg("rows"), py::arg("seed") = 0,
        "Top-2 PCA projection (power iteration with deflation).");

    m.def(
        "blend",
        [](const std::vector<double>& local, const std::vector<double>& global_v,
           double alpha) {
            return blend(wrap_flat(local), wrap_flat(global_v), alpha).values;
        },
        py::arg("local"), py::arg("global_params"), py::arg("alpha"),
        "Per-element alpha * local + (1 - alpha) * global.");
    m.def(
        "fedavg",
        [](const std::vector<std::pair<std::uint64_t, std::vector<double>>>& updates,
           bool uniform) {
            std::vector<ClientUpdate> us;
            us.reserve(updates.size());
            int next_id = 1;
            for (const auto& [samples, values] : updates) {
                us.push_back({next_id++, samples, wrap_flat(values)});
            }
            return fedavg(us, uniform).values;
        },
        py::arg("updates"), py::arg("uniform") = false,
        "Sample-count-weighted average of (sample_count, values) updates.");

    m.def(
        "mix_seed",
        [](std::uint64_t seed, const std::vector<std::uint64_t>& parts) {
            std::uint64_t s = seed;
            for (std::uint64_t p : parts) {
                s = mix_seed(s, p);
            }
            return s;
        },
        py::arg("seed"), py::arg("parts"),
        "Fold stream tags into a base seed (splitmix64 mixing).");

    m.def(
        "run",
        [](const std::string& subcommand, const std::string& config,
           const std::map<std::string, std::string>& overrides) {
            const ExperimentConfig cfg = config_of(config, overrides, subcommand);
            std::ostringstream log;
            if (subcommand == "synth") {
                cmd_synth(cfg, log);
            } else if (subcommand == "prep") {
                cmd_prep(cfg, log);
            } else if (subcommand == "e1") {
                cmd_e1(cfg, log);
            } else if (subcommand == "e2") {
                cmd_e2(cfg, log);
            } else if (subcommand == "pca") {
                cmd_pca(cfg, log);
            } else if (subcommand == "report") {
                cmd_report(cfg, log);
            } else {
                throw ConfigError("unknown subcommand '" + subcommand + "'");
            }
            return log.str();
        },
        py::arg("subcommand"), py::arg("config") = std::string(),
        py::arg("overrides") = std::map<std::string, std::string>(),
        "Run one pipeline subcommand (synth/prep/e1/e2/pca/report); returns "
        "its log.");
}
