#include "llost/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "llost/evalcli.hpp"
#include "llost/ingest.hpp"

namespace llost {

namespace {

namespace fs = std::filesystem;

// Raised during option/config interpretation; maps to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

nlohmann::json load_json_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("invalid JSON in " + path + " at line " + std::to_string(line) +
                          ", column " + std::to_string(col) + ": " + e.what());
    }
}

void require_known_keys(const nlohmann::json& j, const std::vector<std::string>& keys,
                        const std::string& where) {
    if (j.is_null()) return;
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& el : j.items()) {
        if (std::find(keys.begin(), keys.end(), el.key()) == keys.end())
            throw ConfigError("unknown config field '" + el.key() + "' in " + where);
    }
}

nlohmann::json version_info() {
    return nlohmann::json{
        {"llost", kVersion},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                      "." + std::to_string(EIGEN_MINOR_VERSION)},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
        {"compiler", __VERSION__}};
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const nlohmann::json& effective_config, std::uint64_t seed,
                    const std::vector<std::string>& args) {
    fs::create_directories(out_dir);
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(effective_config.dump())));
    const nlohmann::json j = {{"command", command},       {"config", effective_config},
                              {"config_hash", hash},      {"seed", seed},
                              {"args", args},             {"versions", version_info()}};
    std::ofstream f(fs::path(out_dir) / "run_manifest.json", std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write run manifest under " + out_dir);
    f << j.dump(2) << '\n';
}

// Model + train sections shared by train / per-type / ablate configs.
struct TrainSpec {
    std::string kind = "llost";
    ModelConfig mc;
    CvaeConfig cc;
    TrainConfig tc;
    nlohmann::json effective;
};

TrainSpec parse_train_spec(const nlohmann::json& cfg, const DatasetBundle& bundle,
                           bool require_llost, const std::string& where) {
    TrainSpec s;
    nlohmann::json jm = cfg.value("model", nlohmann::json::object());
    const nlohmann::json jt = cfg.value("train", nlohmann::json::object());
    if (!jm.is_object()) throw ConfigError("'model' must be a JSON object");
    s.kind = jm.value("kind", std::string("llost"));
    if (s.kind != "llost" && s.kind != "cvae")
        throw ConfigError("model.kind must be 'llost' or 'cvae'");
    if (require_llost && s.kind != "llost")
        throw ConfigError(where + " runs the dual-VAE model; set model.kind to 'llost'");
    jm.erase("kind");

    const int declared_vocab = jm.value("vocab", 0);
    const int declared_types = jm.value("n_types", 0);
    if (declared_vocab != 0 && declared_vocab != bundle.vocab)
        throw ConfigError("config vocab " + std::to_string(declared_vocab) +
                          " disagrees with the dataset's " + std::to_string(bundle.vocab));
    if (declared_types != 0 && declared_types != bundle.n_types)
        throw ConfigError("config n_types " + std::to_string(declared_types) +
                          " disagrees with the dataset's " + std::to_string(bundle.n_types));

    if (s.kind == "llost") {
        require_known_keys(jm,
                           {"vocab", "n_types", "likelihood", "shared", "lesion_latent",
                            "dec_points", "label_condition", "shared_steps", "shared_blocks",
                            "prior_steps", "prior_blocks", "scale_clamp", "mmd_bandwidth",
                            "init_seed"},
                           "model");
        s.mc = jm.get<ModelConfig>();
        s.mc.vocab = bundle.vocab;
        s.mc.n_types = bundle.n_types;
        s.mc.validate();
        s.effective["model"] = s.mc;
    } else {
        require_known_keys(jm,
                           {"vocab", "n_types", "likelihood", "latent", "prior_steps",
                            "prior_blocks", "scale_clamp", "init_seed"},
                           "model");
        s.cc = jm.get<CvaeConfig>();
        s.cc.vocab = bundle.vocab;
        s.cc.n_types = bundle.n_types;
        s.cc.validate();
        s.effective["model"] = s.cc;
    }
    s.effective["model"]["kind"] = s.kind;

    require_known_keys(jt,
                       {"epochs", "batch_size", "lr", "patience", "seed", "lambda_recon_m",
                        "lambda_recon_i", "lambda_mmd", "lambda_kl"},
                       "train");
    s.tc = jt.get<TrainConfig>();
    s.tc.validate();
    s.effective["train"] = s.tc;
    return s;
}

Dataset merge_splits(const DatasetBundle& b) {
    Dataset pool{b.n_types, b.vocab, b.train.gene_names, {}};
    for (const Dataset* d : {&b.train, &b.val, &b.test})
        pool.samples.insert(pool.samples.end(), d->samples.begin(), d->samples.end());
    return pool;
}

EpochHook progress_hook() {
    return [](const TrainCurveRow& tr, const TrainCurveRow& vr) {
        std::printf("epoch %3d  train perp %-12.6g val perp %-12.6g total %.6g\n", tr.epoch,
                    tr.perplexity, vr.perplexity, vr.total);
        std::fflush(stdout);
    };
}

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---- subcommand bodies ------------------------------------------------

struct SynthOpts {
    std::string config, out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int cmd_synth(const SynthOpts& o, const std::vector<std::string>& args) {
    const nlohmann::json cfg = load_json_config(o.config);
    require_known_keys(cfg,
                       {"n_types", "samples_per_type", "vocab_size", "points_per_cloud",
                        "signature_overlap", "seed", "split_ratios", "split_seed"},
                       "config");
    SynthConfig sc;
    sc.n_types = cfg.value("n_types", sc.n_types);
    sc.samples_per_type = cfg.value("samples_per_type", sc.samples_per_type);
    sc.vocab_size = cfg.value("vocab_size", sc.vocab_size);
    sc.points_per_cloud = cfg.value("points_per_cloud", sc.points_per_cloud);
    sc.signature_overlap = cfg.value("signature_overlap", sc.signature_overlap);
    sc.seed = cfg.value("seed", sc.seed);
    if (o.seed_set) sc.seed = o.seed;
    sc.validate();

    Eigen::Vector3d ratios(0.7, 0.15, 0.15);
    if (cfg.contains("split_ratios")) {
        const auto v = cfg.at("split_ratios").get<std::vector<double>>();
        if (v.size() != 3) throw ConfigError("split_ratios must have 3 entries");
        ratios = Eigen::Vector3d(v[0], v[1], v[2]);
    }
    const std::uint64_t split_seed = cfg.value("split_seed", sc.seed + 1);

    const std::vector<GenSample> data = gen_dataset(sc);
    SplitIndices splits;
    try {
        std::vector<PairedSample> flat;
        flat.reserve(data.size());
        for (const GenSample& g : data) flat.push_back(g.sample);
        splits = split_dataset(flat, ratios, split_seed);
    } catch (const StratificationError& e) {
        throw ConfigError(e.what());
    }
    write_dataset(o.out_dir, data, splits, sc);

    nlohmann::json eff = cfg;
    eff["seed"] = sc.seed;
    eff["split_seed"] = split_seed;
    write_manifest(o.out_dir, "synth", eff, sc.seed, args);
    std::printf("wrote %d samples (%d/%d/%d train/val/test) to %s\n",
                static_cast<int>(data.size()), static_cast<int>(splits.train.size()),
                static_cast<int>(splits.val.size()), static_cast<int>(splits.test.size()),
                o.out_dir.c_str());
    return 0;
}

struct IngestOpts {
    std::string mask, meta, out, out_dir;
    int points = 2048;
    double target_dz = 1.0;
    std::uint64_t seed = 1;
};

int cmd_ingest(const IngestOpts& o, const std::vector<std::string>& args) {
    if (o.points < 1) throw ConfigError("--points must be >= 1");
    if (!(o.target_dz > 0.0)) throw ConfigError("--target-dz must be positive");
    const MaskVolume mask = read_npy_mask(o.mask, o.meta);
    const Cloud cloud = ingest_mask(mask, o.points, o.target_dz, o.seed);
    const fs::path parent = fs::path(o.out).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    write_ply(cloud, o.out);
    if (!o.out_dir.empty()) {
        const nlohmann::json eff = {{"mask", o.mask},
                                    {"meta", o.meta},
                                    {"points", o.points},
                                    {"target_dz", o.target_dz},
                                    {"out", o.out}};
        write_manifest(o.out_dir, "ingest", eff, o.seed, args);
    }
    std::printf("sampled %d surface points -> %s\n", static_cast<int>(cloud.rows()),
                o.out.c_str());
    return 0;
}

struct TrainOpts {
    std::string config, data, out_dir, resume;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int cmd_train(const TrainOpts& o, const std::vector<std::string>& args) {
    const DatasetBundle bundle = load_dataset(o.data);
    const nlohmann::json cfg = load_json_config(o.config);
    require_known_keys(cfg, {"model", "train"}, "config");
    TrainSpec s = parse_train_spec(cfg, bundle, false, "train");
    if (o.seed_set) s.tc.seed = o.seed;
    s.effective["train"]["seed"] = s.tc.seed;

    write_manifest(o.out_dir, "train", s.effective, s.tc.seed, args);
    FitResult fr;
    if (s.kind == "llost") {
        LlostModel model(s.mc);
        fr = fit(model, bundle, s.tc, o.out_dir, o.resume, progress_hook());
    } else {
        CvaeModel model(s.cc);
        fr = train_cvae(model, bundle, s.tc, o.out_dir, o.resume, progress_hook());
    }
    std::printf("done: %d epochs, best epoch %d, best val perplexity %s\n", fr.epochs_completed,
                fr.best_epoch, g17(fr.best_val_perplexity).c_str());
    std::printf("checkpoints: %s\n", fr.last_path.c_str());
    return 0;
}

struct LoadedModel {
    std::unique_ptr<LlostModel> llost;
    std::unique_ptr<CvaeModel> cvae;
    int vocab = 0, n_types = 0;
};

LoadedModel load_model(const CheckpointData& d) {
    if (d.epoch < 1) throw std::runtime_error("checkpoint is untrained (no completed epochs)");
    LoadedModel m;
    if (d.kind == "llost") {
        m.llost = make_llost_from_checkpoint(d);
        m.vocab = m.llost->config().vocab;
        m.n_types = m.llost->config().n_types;
    } else if (d.kind == "cvae") {
        m.cvae = make_cvae_from_checkpoint(d);
        m.vocab = m.cvae->config().vocab;
        m.n_types = m.cvae->config().n_types;
    } else {
        throw std::runtime_error("unknown checkpoint kind '" + d.kind + "'");
    }
    return m;
}

struct PredictOpts {
    std::string ckpt, data, split = "test", cloud, out_dir, mode = "counts";
    int label = -1;
    std::uint64_t seed = 1;
};

int cmd_predict(const PredictOpts& o, const std::vector<std::string>& args) {
    if (o.cloud.empty() == o.data.empty())
        throw ConfigError("predict needs exactly one input: --data <dir> or --cloud <ply>");
    const CheckpointData d = load_checkpoint(o.ckpt);
    const LoadedModel m = load_model(d);
    const PredictMode mode =
        o.mode == "counts" ? PredictMode::Counts : PredictMode::Occurrence;
    Rng rng(o.seed);
    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);

    const nlohmann::json eff = {{"ckpt", o.ckpt},   {"data", o.data},  {"split", o.split},
                                {"cloud", o.cloud}, {"label", o.label}, {"mode", o.mode}};
    write_manifest(o.out_dir, "predict", eff, o.seed, args);

    const auto predict_batch = [&](const Batch& b) {
        return m.llost ? m.llost->predict(b, rng, mode) : m.cvae->predict(b, rng, mode);
    };

    if (!o.cloud.empty()) {
        if (o.label < 0 || o.label >= m.n_types)
            throw ConfigError("--label out of range: have " + std::to_string(m.n_types) +
                              " types");
        const Cloud raw = read_ply(o.cloud);
        const Cloud norm = normalize_cloud(raw);
        Batch b;
        b.n_points = static_cast<int>(norm.rows());
        b.clouds = norm;
        b.cloud_list = {norm};
        b.counts = Eigen::MatrixXd::Zero(1, m.vocab);
        b.occurrence = Eigen::MatrixXd::Zero(1, m.vocab);
        b.one_hot = Eigen::MatrixXd::Zero(1, m.n_types);
        b.one_hot(0, o.label) = 1.0;
        b.tml = {0.0};
        const PredictionResult p = predict_batch(b);

        std::ofstream f(dir / "profile.csv", std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write profile.csv");
        f << (mode == PredictMode::Counts
                  ? "gene_index,expected_count,occurrence,binary,sampled_count\n"
                  : "gene_index,expected_count,occurrence,binary\n");
        for (int j = 0; j < m.vocab; ++j) {
            f << j << ',' << g17(p.expected_counts(0, j)) << ',' << g17(p.occurrence(0, j)) << ','
              << static_cast<int>(p.binary(0, j));
            if (mode == PredictMode::Counts) f << ',' << p.sampled_counts[0][j];
            f << '\n';
        }
        std::printf("wrote %s\n", (dir / "profile.csv").string().c_str());
        return 0;
    }

    const DatasetBundle bundle = load_dataset(o.data);
    const Dataset& ds = bundle.split(o.split);
    if (bundle.vocab != m.vocab || bundle.n_types != m.n_types)
        throw ConfigError("dataset dimensions disagree with the checkpoint");
    const int n = static_cast<int>(ds.samples.size());
    Eigen::MatrixXd expected(n, m.vocab), occurrence(n, m.vocab), binary(n, m.vocab);
    std::vector<std::vector<int>> sampled(n);
    std::vector<std::string> ids(n);
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (const std::vector<int>& chunk : make_batches(idx, 32, 1)) {
        const Batch b = make_batch(ds, chunk);
        const PredictionResult p = predict_batch(b);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            expected.row(chunk[i]) = p.expected_counts.row(static_cast<int>(i));
            occurrence.row(chunk[i]) = p.occurrence.row(static_cast<int>(i));
            binary.row(chunk[i]) = p.binary.row(static_cast<int>(i));
            if (mode == PredictMode::Counts) sampled[chunk[i]] = p.sampled_counts[i];
            ids[chunk[i]] = ds.samples[chunk[i]].id;
        }
    }
    write_matrix_csv((dir / "pred_counts.csv").string(), ids, ds.gene_names, expected);
    write_matrix_csv((dir / "pred_occurrence.csv").string(), ids, ds.gene_names, occurrence);
    if (mode == PredictMode::Counts) {
        std::ofstream f(dir / "sampled_counts.csv", std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write sampled_counts.csv");
        f << "id";
        for (const std::string& g : ds.gene_names) f << ',' << g;
        f << '\n';
        for (int i = 0; i < n; ++i) {
            f << ids[i];
            for (int j = 0; j < m.vocab; ++j) f << ',' << sampled[i][j];
            f << '\n';
        }
    }
    std::printf("wrote predictions for %d samples under %s\n", n, o.out_dir.c_str());
    return 0;
}

struct EvalOpts {
    std::string ckpt, data, split = "test", out_dir;
    int bootstrap = 1000, batch = 32;
    std::uint64_t seed = 1;
};

int cmd_eval(const EvalOpts& o, const std::vector<std::string>& args) {
    const CheckpointData d = load_checkpoint(o.ckpt);
    const LoadedModel m = load_model(d);
    const DatasetBundle bundle = load_dataset(o.data);
    const Dataset& ds = bundle.split(o.split);
    if (bundle.vocab != m.vocab || bundle.n_types != m.n_types)
        throw ConfigError("dataset dimensions disagree with the checkpoint");

    const EvalArtifacts a = m.llost
                                ? evaluate_model(*m.llost, ds, o.batch, o.bootstrap, o.seed)
                                : evaluate_model(*m.cvae, ds, o.batch, o.bootstrap, o.seed);
    write_eval_artifacts(o.out_dir, a, ds);
    const nlohmann::json eff = {{"ckpt", o.ckpt},
                                {"data", o.data},
                                {"split", o.split},
                                {"bootstrap", o.bootstrap},
                                {"batch", o.batch}};
    write_manifest(o.out_dir, "eval", eff, o.seed, args);
    const MetricReport& r = a.report;
    std::printf("n=%d  perplexity %.6g  rmse %.6g  f1 %.4f  ppv %.4f (boot %.4f +/- %.4f)\n",
                r.n_samples, r.log_perplexity, r.rmse, r.f1, r.ppv, r.ppv_mean, r.ppv_std);
    return 0;
}

struct PerTypeOpts {
    std::string config, data, out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int cmd_per_type(const PerTypeOpts& o, const std::vector<std::string>& args) {
    const DatasetBundle bundle = load_dataset(o.data);
    const nlohmann::json cfg = load_json_config(o.config);
    require_known_keys(cfg, {"model", "train", "type", "bootstrap", "holdout_seed"}, "config");
    const TrainSpec s = parse_train_spec(cfg, bundle, true, "per-type");
    const int n_boot = cfg.value("bootstrap", 1000);
    std::uint64_t hseed = cfg.value("holdout_seed", std::uint64_t{1});
    if (o.seed_set) hseed = o.seed;

    std::vector<int> types;
    const nlohmann::json jt = cfg.value("type", nlohmann::json("all"));
    if (jt.is_string()) {
        if (jt.get<std::string>() != "all")
            throw ConfigError("config field 'type' must be an integer or \"all\"");
        types.resize(bundle.n_types);
        std::iota(types.begin(), types.end(), 0);
    } else if (jt.is_number_integer()) {
        const int t = jt.get<int>();
        if (t < 0 || t >= bundle.n_types) throw ConfigError("config field 'type' out of range");
        types = {t};
    } else {
        throw ConfigError("config field 'type' must be an integer or \"all\"");
    }

    nlohmann::json eff = s.effective;
    eff["bootstrap"] = n_boot;
    eff["holdout_seed"] = hseed;
    eff["type"] = jt;
    write_manifest(o.out_dir, "per-type", eff, hseed, args);

    const Dataset pool = merge_splits(bundle);
    std::vector<PerTypeRow> rows;
    for (const int t : types) {
        std::printf("type %d: training with 15%% held out...\n", t);
        std::fflush(stdout);
        const std::string tdir = (fs::path(o.out_dir) / ("type" + std::to_string(t))).string();
        rows.push_back(
            per_type_eval(pool, t, s.mc, s.tc, tdir, n_boot, Rng::derive_seed(hseed, t)));
        const PerTypeRow& r = rows.back();
        std::printf("type %d: n=%d held=%d f1 %.4f ppv %.4f +/- %.4f\n", t, r.n_total,
                    r.n_held_out, r.report.f1, r.report.ppv_mean, r.report.ppv_std);
        std::fflush(stdout);
    }

    {
        std::ofstream f(fs::path(o.out_dir) / "per_type.csv", std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write per_type.csv");
        f << "type,n_total,n_held_out,best_epoch,best_val_perplexity,f1,ppv,ppv_mean,ppv_std,"
             "rmse,log_perplexity\n";
        for (const PerTypeRow& r : rows) {
            f << r.type << ',' << r.n_total << ',' << r.n_held_out << ',' << r.best_epoch << ','
              << g17(r.best_val_perplexity) << ',' << g17(r.report.f1) << ',' << g17(r.report.ppv)
              << ',' << g17(r.report.ppv_mean) << ',' << g17(r.report.ppv_std) << ','
              << g17(r.report.rmse) << ',' << g17(r.report.log_perplexity) << '\n';
        }
    }
    {
        nlohmann::json jrows = nlohmann::json::array();
        for (const PerTypeRow& r : rows) {
            jrows.push_back({{"type", r.type},
                             {"n_total", r.n_total},
                             {"n_held_out", r.n_held_out},
                             {"best_epoch", r.best_epoch},
                             {"best_val_perplexity", r.best_val_perplexity},
                             {"report", r.report}});
        }
        std::ofstream f(fs::path(o.out_dir) / "per_type.json", std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write per_type.json");
        f << nlohmann::json{{"rows", jrows}}.dump(2) << '\n';
    }
    return 0;
}

struct AblateOpts {
    std::string config, data, out_dir;
    std::uint64_t seed = 1;
};

int cmd_ablate(const AblateOpts& o, const std::vector<std::string>& args) {
    const DatasetBundle bundle = load_dataset(o.data);
    const nlohmann::json cfg = load_json_config(o.config);
    require_known_keys(cfg, {"model", "train", "bootstrap"}, "config");
    const TrainSpec s = parse_train_spec(cfg, bundle, true, "ablate");
    const int n_boot = cfg.value("bootstrap", 1000);

    nlohmann::json eff = s.effective;
    eff["bootstrap"] = n_boot;
    write_manifest(o.out_dir, "ablate", eff, o.seed, args);

    const AblationResult r = ablation_run(bundle, s.mc, s.tc, o.out_dir, n_boot, o.seed);
    for (const AblationRow& row : r.rows) {
        std::printf("%-8s shared=%-4d label=%d  f1 %.4f  ppv %.4f +/- %.4f  rmse %.6g\n",
                    row.variant.c_str(), row.shared, row.label_condition ? 1 : 0, row.report.f1,
                    row.report.ppv_mean, row.report.ppv_std, row.report.rmse);
    }
    std::printf("f1(s50) - f1(s200): %.4f  [%.4f, %.4f] (95%% paired bootstrap)\n",
                r.f1_diff_mean, r.f1_diff_lo, r.f1_diff_hi);
    return 0;
}

struct PlotOpts {
    std::string kind, ckpt, data, split = "test", eval_dir, out_dir;
    double perplexity = 30.0;
    std::uint64_t seed = 1;
};

int cmd_plot(const PlotOpts& o, const std::vector<std::string>& args) {
    fs::create_directories(o.out_dir);
    if (o.kind == "latent") {
        if (o.ckpt.empty() || o.data.empty())
            throw ConfigError("plot --kind latent needs --ckpt and --data");
        const CheckpointData d = load_checkpoint(o.ckpt);
        if (d.kind != "llost")
            throw ConfigError("latent projection needs a dual-VAE checkpoint");
        const LoadedModel m = load_model(d);
        const DatasetBundle bundle = load_dataset(o.data);
        const Dataset& ds = bundle.split(o.split);

        const int n = static_cast<int>(ds.samples.size());
        Eigen::MatrixXd latents(n, m.llost->config().shared);
        std::vector<int> labels(n);
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        for (const std::vector<int>& chunk : make_batches(idx, 32, 1)) {
            const Batch b = make_batch(ds, chunk);
            const Eigen::MatrixXd z = m.llost->shared_embedding(b);
            for (std::size_t i = 0; i < chunk.size(); ++i) {
                latents.row(chunk[i]) = z.row(static_cast<int>(i));
                labels[chunk[i]] = ds.samples[chunk[i]].label;
            }
        }
        TsneConfig tc;
        tc.seed = o.seed;
        tc.perplexity = o.perplexity;
        project_2d(latents, labels, (fs::path(o.out_dir) / "latent_tsne").string(), tc);
        const nlohmann::json eff = {{"kind", "latent"},   {"ckpt", o.ckpt},
                                    {"data", o.data},     {"split", o.split},
                                    {"perplexity", o.perplexity}};
        write_manifest(o.out_dir, "plot", eff, o.seed, args);
        std::printf("wrote latent_tsne.svg / latent_tsne.csv under %s\n", o.out_dir.c_str());
        return 0;
    }

    if (o.eval_dir.empty()) throw ConfigError("plot --kind tml needs --eval-dir");
    const std::vector<PerSampleRow> rows =
        read_per_sample_csv((fs::path(o.eval_dir) / "per_sample.csv").string());
    if (rows.empty()) throw std::runtime_error("per_sample.csv has no rows");
    Eigen::MatrixXd pts(static_cast<int>(rows.size()), 2);
    std::vector<int> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        pts(static_cast<int>(i), 0) = rows[i].tml_pred;
        pts(static_cast<int>(i), 1) = rows[i].tml_error;
        labels[i] = rows[i].label;
    }
    {
        std::ofstream f(fs::path(o.out_dir) / "tml_scatter.csv", std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write tml_scatter.csv");
        f << "id,label,tml_true,tml_pred,tml_error\n";
        for (const PerSampleRow& r : rows) {
            f << r.id << ',' << r.label << ',' << g17(r.tml_true) << ',' << g17(r.tml_pred) << ','
              << g17(r.tml_error) << '\n';
        }
    }
    write_scatter_svg((fs::path(o.out_dir) / "tml_scatter.svg").string(), pts, labels,
                      "expected TML", "TML error (pred - true)", "TML prediction error");
    const nlohmann::json eff = {{"kind", "tml"}, {"eval_dir", o.eval_dir}};
    write_manifest(o.out_dir, "plot", eff, o.seed, args);
    std::printf("wrote tml_scatter.svg / tml_scatter.csv under %s\n", o.out_dir.c_str());
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"lesion-to-mutation dual-VAE toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    SynthOpts so;
    CLI::App* synth = app.add_subcommand("synth", "generate a paired synthetic dataset");
    synth->add_option("--config", so.config, "synth config JSON")->required();
    synth->add_option("--out-dir", so.out_dir, "dataset output directory")->required();
    CLI::Option* synth_seed = synth->add_option("--seed", so.seed, "override the config seed");

    IngestOpts io;
    CLI::App* ingest = app.add_subcommand("ingest", "mask volume -> surface point cloud PLY");
    ingest->add_option("--mask", io.mask, "NPY uint8 mask volume")->required();
    ingest->add_option("--meta", io.meta, "JSON sidecar with spacing/origin")->required();
    ingest->add_option("--out", io.out, "output PLY path")->required();
    ingest->add_option("--points", io.points, "surface samples per cloud");
    ingest->add_option("--target-dz", io.target_dz, "max slice spacing after interpolation, mm");
    ingest->add_option("--seed", io.seed, "sampling seed");
    ingest->add_option("--out-dir", io.out_dir, "optional manifest directory");

    TrainOpts to;
    CLI::App* train = app.add_subcommand("train", "train the dual-VAE model or a CVAE baseline");
    train->add_option("--config", to.config, "model + train config JSON")->required();
    train->add_option("--data", to.data, "dataset directory")->required();
    train->add_option("--out-dir", to.out_dir, "checkpoint/curve output directory")->required();
    CLI::Option* train_seed = train->add_option("--seed", to.seed, "override train.seed");
    train->add_option("--resume", to.resume, "resume from a last.ckpt");

    PredictOpts po;
    CLI::App* predict = app.add_subcommand("predict", "lesion -> mutation profile prediction");
    predict->add_option("--ckpt", po.ckpt, "trained checkpoint")->required();
    predict->add_option("--data", po.data, "dataset directory (split mode)");
    predict->add_option("--split", po.split, "dataset split")
        ->check(CLI::IsMember({"train", "val", "test"}));
    predict->add_option("--cloud", po.cloud, "single PLY cloud (single mode)");
    predict->add_option("--label", po.label, "cancer type index for --cloud");
    predict->add_option("--mode", po.mode, "counts or occurrence")
        ->check(CLI::IsMember({"counts", "occurrence"}));
    predict->add_option("--out-dir", po.out_dir, "prediction output directory")->required();
    predict->add_option("--seed", po.seed, "prediction sampling seed");

    EvalOpts eo;
    CLI::App* eval = app.add_subcommand("eval", "score a checkpoint on a dataset split");
    eval->add_option("--ckpt", eo.ckpt, "trained checkpoint")->required();
    eval->add_option("--data", eo.data, "dataset directory")->required();
    eval->add_option("--split", eo.split, "dataset split")
        ->check(CLI::IsMember({"train", "val", "test"}));
    eval->add_option("--out-dir", eo.out_dir, "report output directory")->required();
    eval->add_option("--bootstrap", eo.bootstrap, "PPV bootstrap draws");
    eval->add_option("--batch", eo.batch, "evaluation batch size");
    eval->add_option("--seed", eo.seed, "prediction/bootstrap seed");

    PerTypeOpts pto;
    CLI::App* per_type = app.add_subcommand("per-type", "hold-out-15% protocol per cancer type");
    per_type->add_option("--config", pto.config, "model + train (+type/bootstrap) config JSON")
        ->required();
    per_type->add_option("--data", pto.data, "dataset directory")->required();
    per_type->add_option("--out-dir", pto.out_dir, "output directory")->required();
    CLI::Option* pt_seed = per_type->add_option("--seed", pto.seed, "override holdout_seed");

    AblateOpts ao;
    CLI::App* ablate = app.add_subcommand("ablate", "shared-size and no-label ablations");
    ablate->add_option("--config", ao.config, "model + train config JSON")->required();
    ablate->add_option("--data", ao.data, "dataset directory")->required();
    ablate->add_option("--out-dir", ao.out_dir, "output directory")->required();
    ablate->add_option("--seed", ao.seed, "evaluation/bootstrap seed");

    PlotOpts plo;
    CLI::App* plot = app.add_subcommand("plot", "latent t-SNE or TML-error scatter");
    plot->add_option("--kind", plo.kind, "latent or tml")
        ->required()
        ->check(CLI::IsMember({"latent", "tml"}));
    plot->add_option("--ckpt", plo.ckpt, "checkpoint (latent mode)");
    plot->add_option("--data", plo.data, "dataset directory (latent mode)");
    plot->add_option("--split", plo.split, "dataset split (latent mode)")
        ->check(CLI::IsMember({"train", "val", "test"}));
    plot->add_option("--eval-dir", plo.eval_dir, "eval output directory (tml mode)");
    plot->add_option("--out-dir", plo.out_dir, "plot output directory")->required();
    plot->add_option("--perplexity", plo.perplexity, "t-SNE perplexity (latent mode)");
    plot->add_option("--seed", plo.seed, "t-SNE seed");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        std::cout << kVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n' << app.help();
        return 2;
    }

    so.seed_set = synth_seed->count() > 0;
    to.seed_set = train_seed->count() > 0;
    pto.seed_set = pt_seed->count() > 0;

    try {
        if (*synth) return cmd_synth(so, args);
        if (*ingest) return cmd_ingest(io, args);
        if (*train) return cmd_train(to, args);
        if (*predict) return cmd_predict(po, args);
        if (*eval) return cmd_eval(eo, args);
        if (*per_type) return cmd_per_type(pto, args);
        if (*ablate) return cmd_ablate(ao, args);
        if (*plot) return cmd_plot(plo, args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cerr << "error: no subcommand\n" << app.help();
    return 2;
}

}  // namespace llost
