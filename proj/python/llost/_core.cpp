#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "llost/cli.hpp"
#include "llost/evalcli.hpp"
#include "llost/ingest.hpp"

namespace py = pybind11;

namespace {

llost::PredictMode parse_mode(const std::string& mode) {
    if (mode == "counts") return llost::PredictMode::Counts;
    if (mode == "occurrence") return llost::PredictMode::Occurrence;
    throw std::invalid_argument("mode must be 'counts' or 'occurrence'");
}

// Single-cloud batch with empty profile columns; prediction only reads the
// cloud and the label.
llost::Batch cloud_batch(const Eigen::MatrixXd& cloud, int label, int vocab, int n_types) {
    if (cloud.cols() != 3) throw std::invalid_argument("cloud must be N x 3");
    if (label < 0 || label >= n_types) throw std::invalid_argument("label out of range");
    const llost::Cloud norm = llost::normalize_cloud(cloud);
    llost::Batch b;
    b.n_points = static_cast<int>(norm.rows());
    b.clouds = norm;
    b.cloud_list = {norm};
    b.counts = Eigen::MatrixXd::Zero(1, vocab);
    b.occurrence = Eigen::MatrixXd::Zero(1, vocab);
    b.one_hot = Eigen::MatrixXd::Zero(1, n_types);
    b.one_hot(0, label) = 1.0;
    b.tml = {0.0};
    return b;
}

py::dict predict_profile(const std::string& ckpt_path, const Eigen::MatrixXd& cloud, int label,
                         std::uint64_t seed, const std::string& mode) {
    const llost::CheckpointData d = llost::load_checkpoint(ckpt_path);
    const llost::PredictMode m = parse_mode(mode);
    llost::Rng rng(seed);
    llost::PredictionResult p;
    int vocab = 0;
    if (d.kind == "llost") {
        const auto model = llost::make_llost_from_checkpoint(d);
        vocab = model->config().vocab;
        p = model->predict(cloud_batch(cloud, label, vocab, model->config().n_types), rng, m);
    } else {
        const auto model = llost::make_cvae_from_checkpoint(d);
        vocab = model->config().vocab;
        p = model->predict(cloud_batch(cloud, label, vocab, model->config().n_types), rng, m);
    }
    py::dict out;
    out["expected_counts"] = Eigen::VectorXd(p.expected_counts.row(0));
    out["occurrence"] = Eigen::VectorXd(p.occurrence.row(0));
    out["binary"] = Eigen::VectorXd(p.binary.row(0));
    if (m == llost::PredictMode::Counts) out["sampled_counts"] = p.sampled_counts[0];
    return out;
}

py::dict evaluate_checkpoint(const std::string& ckpt_path, const std::string& data_dir,
                             const std::string& split, int batch_size, int n_bootstrap,
                             std::uint64_t seed) {
    const llost::CheckpointData d = llost::load_checkpoint(ckpt_path);
    const llost::DatasetBundle bundle = llost::load_dataset(data_dir);
    const llost::Dataset& ds = bundle.split(split);
    llost::EvalArtifacts a;
    if (d.kind == "llost") {
        const auto model = llost::make_llost_from_checkpoint(d);
        a = llost::evaluate_model(*model, ds, batch_size, n_bootstrap, seed);
    } else {
        const auto model = llost::make_cvae_from_checkpoint(d);
        a = llost::evaluate_model(*model, ds, batch_size, n_bootstrap, seed);
    }
    nlohmann::json j = a.report;
    py::dict out;
    for (const auto& [key, value] : j.items()) {
        if (value.is_number_integer()) {
            out[key.c_str()] = value.get<long long>();
        } else if (value.is_number_unsigned()) {
            out[key.c_str()] = value.get<unsigned long long>();
        } else if (value.is_number_float()) {
            out[key.c_str()] = value.get<double>();
        } else if (value.is_boolean()) {
            out[key.c_str()] = value.get<bool>();
        } else if (value.is_array()) {
            out[key.c_str()] = value.get<std::vector<double>>();
        }
    }
    return out;
}

py::tuple shared_embedding(const std::string& ckpt_path, const std::string& data_dir,
                           const std::string& split) {
    const llost::CheckpointData d = llost::load_checkpoint(ckpt_path);
    const auto model = llost::make_llost_from_checkpoint(d);
    const llost::DatasetBundle bundle = llost::load_dataset(data_dir);
    const llost::Dataset& ds = bundle.split(split);
    const int n = static_cast<int>(ds.samples.size());
    Eigen::MatrixXd latents(n, model->config().shared);
    std::vector<int> labels(n);
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (const std::vector<int>& chunk : llost::make_batches(idx, 32, 1)) {
        const llost::Batch b = llost::make_batch(ds, chunk);
        const Eigen::MatrixXd z = model->shared_embedding(b);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            latents.row(chunk[i]) = z.row(static_cast<int>(i));
            labels[chunk[i]] = ds.samples[chunk[i]].label;
        }
    }
    return py::make_tuple(latents, labels);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "lesion-to-mutation dual-VAE core operations";
    m.attr("__version__") = llost::kVersion;

    m.def("cli", &llost::run_cli, py::arg("args"),
          "Run a CLI subcommand in-process; returns the exit code.");

    m.def("chamfer", &llost::chamfer, py::arg("a"), py::arg("b"),
          "Symmetric Chamfer distance between two N x 3 clouds.");

    m.def("read_ply", &llost::read_ply, py::arg("path"));
    m.def(
        "write_ply",
        [](const Eigen::MatrixXd& cloud, const std::string& path, bool binary) {
            llost::write_ply(cloud, path, binary);
        },
        py::arg("cloud"), py::arg("path"), py::arg("binary") = true);

    m.def(
        "ingest_mask",
        [](const std::string& mask_path, const std::string& meta_path, int points,
           double target_dz, std::uint64_t seed) {
            const llost::MaskVolume mv = llost::read_npy_mask(mask_path, meta_path);
            return llost::ingest_mask(mv, points, target_dz, seed);
        },
        py::arg("mask_path"), py::arg("meta_path"), py::arg("points") = 2048,
        py::arg("target_dz") = 1.0, py::arg("seed") = 1,
        "Mask volume -> surface point cloud (N x 3, millimeters).");

    m.def(
        "tsne_embed",
        [](const Eigen::MatrixXd& x, double perplexity, int n_iter, std::uint64_t seed) {
            llost::TsneConfig cfg;
            cfg.perplexity = perplexity;
            cfg.n_iter = n_iter;
            cfg.seed = seed;
            return llost::tsne_embed(x, cfg);
        },
        py::arg("x"), py::arg("perplexity") = 30.0, py::arg("n_iter") = 500, py::arg("seed") = 1);

    m.def("predict_profile", &predict_profile, py::arg("ckpt"), py::arg("cloud"),
          py::arg("label"), py::arg("seed") = 1, py::arg("mode") = "counts",
          "Lesion cloud (N x 3) + type label -> mutation profile prediction dict.");

    m.def("evaluate", &evaluate_checkpoint, py::arg("ckpt"), py::arg("data_dir"),
          py::arg("split") = "test", py::arg("batch_size") = 32, py::arg("bootstrap") = 200,
          py::arg("seed") = 1, "Score a checkpoint on a dataset split; returns the metric dict.");

    m.def("shared_embedding", &shared_embedding, py::arg("ckpt"), py::arg("data_dir"),
          py::arg("split") = "test",
          "Mapped shared latents and labels for a split of a dual-VAE checkpoint.");
}
