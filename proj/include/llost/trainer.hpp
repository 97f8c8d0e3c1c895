#pragma once

#include <functional>
#include <string>
#include <vector>

#include "llost/checkpoint.hpp"

namespace llost {

struct TrainConfig {
    int epochs = 35;
    int batch_size = 32;
    double lr = 1e-3;
    ElboWeights weights;
    int patience = 10;  // early stop on validation perplexity
    std::uint64_t seed = 1;

    void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct FitResult {
    int best_epoch = -1;
    double best_val_perplexity = 0.0;
    int epochs_completed = 0;
    std::vector<TrainCurveRow> curves;
    std::string best_path, last_path;
};

using EpochHook =
    std::function<void(const TrainCurveRow& train_row, const TrainCurveRow& val_row)>;

// One optimizer update from one paired batch. The objective already contains
// both map directions (lesion-to-mutation and back), so their gradients
// accumulate before the single step.
ElboTerms bidirectional_step(LlostModel& model, Adam& opt, const Batch& batch,
                             const ElboWeights& w, Rng& rng);

// Trains on bundle.train with per-epoch train/val perplexity rows, early
// stopping on validation perplexity, and checkpoints under out_dir:
// best.ckpt (best-validation parameters) and last.ckpt (full final state,
// the resume target). curves.csv mirrors the returned rows. On return the
// live model holds the best parameters; pass resume_from=<last.ckpt> to
// continue a previous run to cfg.epochs total.
FitResult fit(LlostModel& model, const DatasetBundle& bundle, const TrainConfig& cfg,
              const std::string& out_dir, const std::string& resume_from = "",
              const EpochHook& hook = nullptr);

FitResult train_cvae(CvaeModel& model, const DatasetBundle& bundle, const TrainConfig& cfg,
                     const std::string& out_dir, const std::string& resume_from = "",
                     const EpochHook& hook = nullptr);

// Perplexity over a whole split with deterministic latents.
double dataset_perplexity(const LlostModel& model, const Dataset& ds, int batch_size,
                          int* n_excluded = nullptr);
double dataset_perplexity(const CvaeModel& model, const Dataset& ds, int batch_size,
                          int* n_excluded = nullptr);

// Consecutive index chunks of at most batch_size; chunks smaller than
// min_size are dropped (training needs >= 2 rows per batch for the MMD).
std::vector<std::vector<int>> make_batches(const std::vector<int>& indices, int batch_size,
                                           int min_size = 1);

void write_curves_csv(const std::string& path, const std::vector<TrainCurveRow>& curves);

}  // namespace llost
