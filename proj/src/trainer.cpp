#include "llost/trainer.hpp"

#include "llost/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace llost {

void TrainConfig::validate() const {
    if (epochs < 1) throw std::runtime_error("train config: epochs must be >= 1");
    // Two rows minimum per training batch, the MMD term is undefined on one.
    if (batch_size < 2) throw std::runtime_error("train config: batch_size must be >= 2");
    if (!(lr > 0.0) || !std::isfinite(lr))
        throw std::runtime_error("train config: lr must be positive and finite");
    if (patience < 1) throw std::runtime_error("train config: patience must be >= 1");
    for (double w : {weights.recon_m, weights.recon_i, weights.mmd, weights.kl})
        if (!std::isfinite(w) || w < 0.0)
            throw std::runtime_error("train config: lambda weights must be finite and >= 0");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"epochs", c.epochs},
                       {"batch_size", c.batch_size},
                       {"lr", c.lr},
                       {"patience", c.patience},
                       {"seed", c.seed},
                       {"lambda_recon_m", c.weights.recon_m},
                       {"lambda_recon_i", c.weights.recon_i},
                       {"lambda_mmd", c.weights.mmd},
                       {"lambda_kl", c.weights.kl}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.patience = j.value("patience", c.patience);
    c.seed = j.value("seed", c.seed);
    c.weights.recon_m = j.value("lambda_recon_m", c.weights.recon_m);
    c.weights.recon_i = j.value("lambda_recon_i", c.weights.recon_i);
    c.weights.mmd = j.value("lambda_mmd", c.weights.mmd);
    c.weights.kl = j.value("lambda_kl", c.weights.kl);
}

std::vector<std::vector<int>> make_batches(const std::vector<int>& indices, int batch_size,
                                           int min_size) {
    if (batch_size < 1) throw std::runtime_error("make_batches: batch_size must be >= 1");
    std::vector<std::vector<int>> out;
    for (std::size_t i = 0; i < indices.size(); i += batch_size) {
        const std::size_t end = std::min(indices.size(), i + static_cast<std::size_t>(batch_size));
        if (end - i < static_cast<std::size_t>(min_size)) continue;
        out.emplace_back(indices.begin() + i, indices.begin() + end);
    }
    return out;
}

void write_curves_csv(const std::string& path, const std::vector<TrainCurveRow>& curves) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "epoch,split,perplexity,recon_m,recon_i,mmd_m,mmd_i,kl_m,kl_i,total\n";
    char buf[512];
    for (const TrainCurveRow& r : curves) {
        std::snprintf(buf, sizeof(buf),
                      "%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch,
                      r.split.c_str(), r.perplexity, r.recon_m, r.recon_i, r.mmd_m, r.mmd_i,
                      r.kl_m, r.kl_i, r.total);
        f << buf;
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

ElboTerms bidirectional_step(LlostModel& model, Adam& opt, const Batch& batch,
                             const ElboWeights& w, Rng& rng) {
    ElboTerms t = model.compute_elbo(batch, w, rng);
    ad::backward(t.loss);
    opt.step();
    return t;
}

namespace {

// What the shared loop needs from a model; both model kinds adapt to it.
struct LoopModel {
    std::string kind;
    ParamRegistry* reg = nullptr;
    nlohmann::json model_config;
    // Stochastic objective on one batch plus one optimizer update.
    std::function<TrainCurveRow(const Batch&, Rng&)> train_step;
    // Objective terms at posterior means, no update, no rng.
    std::function<TrainCurveRow(const Batch&)> eval_terms;
    std::function<double(const Dataset&)> perplexity;
};

void accumulate(TrainCurveRow& acc, const TrainCurveRow& r, double w) {
    acc.recon_m += w * r.recon_m;
    acc.recon_i += w * r.recon_i;
    acc.mmd_m += w * r.mmd_m;
    acc.mmd_i += w * r.mmd_i;
    acc.kl_m += w * r.kl_m;
    acc.kl_i += w * r.kl_i;
    acc.total += w * r.total;
}

void scale_terms(TrainCurveRow& acc, double s) {
    acc.recon_m *= s;
    acc.recon_i *= s;
    acc.mmd_m *= s;
    acc.mmd_i *= s;
    acc.kl_m *= s;
    acc.kl_i *= s;
    acc.total *= s;
}

// Deterministic objective means over a split. Batches follow storage order;
// single-row tails are dropped (same MMD constraint as training).
TrainCurveRow eval_split_terms(const LoopModel& m, const Dataset& ds, int batch_size) {
    std::vector<int> idx(ds.samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    TrainCurveRow acc;
    double n_rows = 0.0;
    for (const std::vector<int>& chunk : make_batches(idx, batch_size, 2)) {
        const TrainCurveRow r = m.eval_terms(make_batch(ds, chunk));
        accumulate(acc, r, static_cast<double>(chunk.size()));
        n_rows += static_cast<double>(chunk.size());
    }
    if (n_rows > 0.0) scale_terms(acc, 1.0 / n_rows);
    return acc;
}

FitResult run_loop(const LoopModel& m, Adam& opt, const DatasetBundle& bundle,
                   const TrainConfig& cfg, const std::string& out_dir,
                   const std::string& resume_from, const EpochHook& hook) {
    cfg.validate();
    const int n_train = static_cast<int>(bundle.train.samples.size());
    const int n_val = static_cast<int>(bundle.val.samples.size());
    if (n_train < 2) throw std::runtime_error("training needs at least 2 train samples");
    if (n_val < 2) throw std::runtime_error("training needs at least 2 validation samples");
    std::filesystem::create_directories(out_dir);

    Rng train_rng(cfg.seed);
    std::vector<TrainCurveRow> curves;
    int start_epoch = 0, best_epoch = -1;
    double best_val = std::numeric_limits<double>::infinity();
    std::map<std::string, ad::Mat> best_snapshot;

    if (!resume_from.empty()) {
        CheckpointData d = load_checkpoint(resume_from);
        if (d.kind != m.kind)
            throw std::runtime_error("resume checkpoint is a '" + d.kind + "' model, expected '" +
                                     m.kind + "'");
        if (d.model_config != m.model_config)
            throw std::runtime_error(
                "resume checkpoint was written for a different model configuration");
        if (d.epoch > 0 && d.adam.m.empty())
            throw std::runtime_error(
                "checkpoint lacks optimizer state; resume from last.ckpt, not best.ckpt");
        restore_params(*m.reg, d.tensors);
        opt.set_state(d.adam);
        if (!d.rng_state.empty()) train_rng.set_state(d.rng_state);
        curves = d.curves;
        start_epoch = d.epoch;
        best_epoch = d.best_epoch;
        if (best_epoch >= 1) {
            best_val = d.best_val;
            // The best parameters live next to the resume source; reload them
            // so the post-training restore works even if no new epoch improves.
            const std::filesystem::path bp =
                std::filesystem::path(resume_from).parent_path() / "best.ckpt";
            if (std::filesystem::exists(bp)) {
                CheckpointData bd = load_checkpoint(bp.string());
                if (bd.kind == m.kind && bd.model_config == m.model_config)
                    best_snapshot = std::move(bd.tensors);
            }
        }
    }

    // Same predicate before the first new epoch and after each one, so a
    // resumed run stops exactly where the uninterrupted run would have.
    const auto exhausted = [&](int epochs_done) {
        return epochs_done - std::max(best_epoch, 0) >= cfg.patience;
    };

    int epochs_done = start_epoch;
    for (int e = start_epoch + 1; e <= cfg.epochs; ++e) {
        if (e > 1 && exhausted(e - 1)) break;

        std::vector<int> order = train_rng.permutation(n_train);
        const std::vector<std::vector<int>> batches = make_batches(order, cfg.batch_size, 2);
        if (batches.empty())
            throw std::runtime_error("no usable training batches (all smaller than 2 rows)");

        TrainCurveRow train_row;
        double n_rows = 0.0;
        for (const std::vector<int>& chunk : batches) {
            const TrainCurveRow r = m.train_step(make_batch(bundle.train, chunk), train_rng);
            accumulate(train_row, r, static_cast<double>(chunk.size()));
            n_rows += static_cast<double>(chunk.size());
        }
        scale_terms(train_row, 1.0 / n_rows);
        train_row.epoch = e;
        train_row.split = "train";
        train_row.perplexity = m.perplexity(bundle.train);

        TrainCurveRow val_row = eval_split_terms(m, bundle.val, cfg.batch_size);
        val_row.epoch = e;
        val_row.split = "val";
        val_row.perplexity = m.perplexity(bundle.val);

        curves.push_back(train_row);
        curves.push_back(val_row);
        epochs_done = e;
        if (hook) hook(train_row, val_row);

        if (val_row.perplexity < best_val) {
            best_val = val_row.perplexity;
            best_epoch = e;
            best_snapshot = snapshot_params(*m.reg);
        }
        if (exhausted(e)) break;
    }

    FitResult res;
    res.best_epoch = best_epoch;
    res.best_val_perplexity = best_val;
    res.epochs_completed = epochs_done;
    res.curves = curves;

    const std::filesystem::path dir(out_dir);
    CheckpointData last;
    last.kind = m.kind;
    last.model_config = m.model_config;
    last.train_config = cfg;
    last.epoch = epochs_done;
    last.best_epoch = best_epoch;
    last.best_val = best_val;
    last.rng_state = train_rng.state();
    last.adam = opt.state();
    last.tensors = snapshot_params(*m.reg);
    last.curves = curves;
    res.last_path = (dir / "last.ckpt").string();
    save_checkpoint(res.last_path, last);

    if (!best_snapshot.empty()) {
        CheckpointData best;
        best.kind = m.kind;
        best.model_config = m.model_config;
        best.train_config = cfg;
        best.epoch = best_epoch;
        best.best_epoch = best_epoch;
        best.best_val = best_val;
        best.curves = curves;
        best.tensors = best_snapshot;  // params only, not a resume target
        res.best_path = (dir / "best.ckpt").string();
        save_checkpoint(res.best_path, best);
        restore_params(*m.reg, best_snapshot);
    }

    write_curves_csv((dir / "curves.csv").string(), curves);
    return res;
}

double perplexity_over(const std::function<Eigen::VectorXd(const Batch&)>& loglik,
                       const Dataset& ds, int batch_size, int* n_excluded) {
    const int n = static_cast<int>(ds.samples.size());
    if (n == 0) throw std::runtime_error("perplexity over an empty split");
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Eigen::VectorXd ll(n), tml(n);
    for (const std::vector<int>& chunk : make_batches(idx, batch_size, 1)) {
        const Batch b = make_batch(ds, chunk);
        const Eigen::VectorXd v = loglik(b);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            ll(chunk[i]) = v(static_cast<int>(i));
            tml(chunk[i]) = b.tml[i];
        }
    }
    return log_perplexity(ll, tml, n_excluded);
}

}  // namespace

double dataset_perplexity(const LlostModel& model, const Dataset& ds, int batch_size,
                          int* n_excluded) {
    return perplexity_over([&](const Batch& b) { return model.heldout_loglik(b); }, ds, batch_size,
                           n_excluded);
}

double dataset_perplexity(const CvaeModel& model, const Dataset& ds, int batch_size,
                          int* n_excluded) {
    return perplexity_over([&](const Batch& b) { return model.heldout_loglik(b); }, ds, batch_size,
                           n_excluded);
}

FitResult fit(LlostModel& model, const DatasetBundle& bundle, const TrainConfig& cfg,
              const std::string& out_dir, const std::string& resume_from, const EpochHook& hook) {
    Adam opt(model.params(), cfg.lr);
    LoopModel m;
    m.kind = "llost";
    m.reg = &model.params();
    m.model_config = model.config();
    m.train_step = [&model, &opt, &cfg](const Batch& b, Rng& rng) {
        const ElboTerms t = bidirectional_step(model, opt, b, cfg.weights, rng);
        TrainCurveRow r;
        r.recon_m = t.recon_m;
        r.recon_i = t.recon_i;
        r.mmd_m = t.mmd_m;
        r.mmd_i = t.mmd_i;
        r.kl_m = t.kl_m;
        r.kl_i = t.kl_i;
        r.total = t.total;
        return r;
    };
    m.eval_terms = [&model, &cfg](const Batch& b) {
        Rng unused(0);
        const ElboTerms t = model.compute_elbo(b, cfg.weights, unused, true);
        TrainCurveRow r;
        r.recon_m = t.recon_m;
        r.recon_i = t.recon_i;
        r.mmd_m = t.mmd_m;
        r.mmd_i = t.mmd_i;
        r.kl_m = t.kl_m;
        r.kl_i = t.kl_i;
        r.total = t.total;
        return r;
    };
    m.perplexity = [&model, &cfg](const Dataset& ds) {
        return dataset_perplexity(model, ds, cfg.batch_size);
    };
    return run_loop(m, opt, bundle, cfg, out_dir, resume_from, hook);
}

FitResult train_cvae(CvaeModel& model, const DatasetBundle& bundle, const TrainConfig& cfg,
                     const std::string& out_dir, const std::string& resume_from,
                     const EpochHook& hook) {
    Adam opt(model.params(), cfg.lr);
    LoopModel m;
    m.kind = "cvae";
    m.reg = &model.params();
    m.model_config = model.config();
    // The baseline's recon/kl land on the mutation-side columns.
    m.train_step = [&model, &opt](const Batch& b, Rng& rng) {
        CvaeTerms t = model.compute_loss(b, rng);
        ad::backward(t.loss);
        opt.step();
        TrainCurveRow r;
        r.recon_m = t.recon;
        r.kl_m = t.kl;
        r.total = t.total;
        return r;
    };
    m.eval_terms = [&model](const Batch& b) {
        Rng unused(0);
        const CvaeTerms t = model.compute_loss(b, unused, true);
        TrainCurveRow r;
        r.recon_m = t.recon;
        r.kl_m = t.kl;
        r.total = t.total;
        return r;
    };
    m.perplexity = [&model, &cfg](const Dataset& ds) {
        return dataset_perplexity(model, ds, cfg.batch_size);
    };
    return run_loop(m, opt, bundle, cfg, out_dir, resume_from, hook);
}

}  // namespace llost
