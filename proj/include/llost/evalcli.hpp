#pragma once

#include <string>
#include <utility>
#include <vector>

#include "llost/metrics.hpp"
#include "llost/trainer.hpp"
#include "llost/tsne.hpp"

namespace llost {

// Scalar metrics over one evaluation split. tml_errors keeps the per-sample
// signed errors (pred - true); the low-burden stratum covers samples whose
// true TML is under 400.
struct MetricReport {
    int n_samples = 0;
    double log_perplexity = 0.0;
    int n_zero_tml_excluded = 0;
    double rmse = 0.0;
    Eigen::VectorXd tml_errors;
    double tml_error_mean = 0.0;
    double tml_abs_error_mean = 0.0;
    double tml_error_mean_low_burden = 0.0;
    int n_low_burden = 0;
    double f1 = 0.0;
    double ppv = 0.0;
    bool ppv_defined = true;
    double ppv_mean = 0.0, ppv_std = 0.0;
    int n_bootstrap = 0;
    std::uint64_t bootstrap_seed = 0;
    long long tp = 0, fp = 0, fn = 0, tn = 0;
};

void to_json(nlohmann::json& j, const MetricReport& r);

// Per-sample prediction artifacts for one split. Everything a reader needs
// to recompute the report is here or in the dataset itself.
struct EvalArtifacts {
    MetricReport report;
    Eigen::MatrixXd expected_counts;  // N x V
    Eigen::MatrixXd occurrence;       // N x V probabilities
    Eigen::MatrixXd binary;           // occurrence >= 0.5
    Eigen::VectorXd logliks;          // N, deterministic latents
    std::vector<std::string> ids;
    std::vector<int> labels;
};

EvalArtifacts evaluate_model(const LlostModel& model, const Dataset& ds, int batch_size,
                             int n_bootstrap, std::uint64_t seed);
EvalArtifacts evaluate_model(const CvaeModel& model, const Dataset& ds, int batch_size,
                             int n_bootstrap, std::uint64_t seed);

// The single scoring path: evaluate_model routes through this, and a reader
// of the persisted CSVs can call it to reproduce report.json exactly.
MetricReport report_from_artifacts(const Eigen::MatrixXd& expected_counts,
                                   const Eigen::MatrixXd& occurrence,
                                   const Eigen::VectorXd& logliks, const Dataset& truth,
                                   int n_bootstrap, std::uint64_t seed);

// report.json, metrics.csv, pred_counts.csv, pred_occurrence.csv,
// per_sample.csv, per_gene_f1.csv under out_dir.
void write_eval_artifacts(const std::string& out_dir, const EvalArtifacts& a, const Dataset& ds);

void write_matrix_csv(const std::string& path, const std::vector<std::string>& ids,
                      const std::vector<std::string>& col_names, const Eigen::MatrixXd& m);
std::pair<std::vector<std::string>, Eigen::MatrixXd> read_matrix_csv(const std::string& path);

struct PerSampleRow {
    std::string id;
    int label = 0;
    double loglik = 0.0, tml_true = 0.0, tml_pred = 0.0, tml_error = 0.0;
};
std::vector<PerSampleRow> read_per_sample_csv(const std::string& path);

// Hold out 15% (floored) of one type, train on everything else (with a
// stratified validation carve for early stopping), score the held-out set.
// Types under 7 samples cannot yield a nonempty holdout and are an error.
struct PerTypeRow {
    int type = 0;
    int n_total = 0, n_held_out = 0;
    int best_epoch = 0;
    double best_val_perplexity = 0.0;
    MetricReport report;
};
PerTypeRow per_type_eval(const Dataset& pool, int type, ModelConfig mc, const TrainConfig& tc,
                         const std::string& out_dir, int n_bootstrap, std::uint64_t seed);

// Trains the shared-size and label-conditioning variants with identical
// seeds, scores each on the test split, and runs one paired row bootstrap
// across variants (same resampled rows per draw) for the box-plot data and
// the s50 - s200 F1 difference CI.
struct AblationRow {
    std::string variant;
    int shared = 0;
    bool label_condition = true;
    int best_epoch = 0;
    double best_val_perplexity = 0.0;
    MetricReport report;
};
struct AblationResult {
    std::vector<AblationRow> rows;
    double f1_diff_mean = 0.0;  // f1(s=50) - f1(s=200), paired bootstrap
    double f1_diff_lo = 0.0, f1_diff_hi = 0.0;  // central 95%
};
AblationResult ablation_run(const DatasetBundle& bundle, const ModelConfig& base,
                            const TrainConfig& tc, const std::string& out_dir, int n_bootstrap,
                            std::uint64_t seed);

// t-SNE projection to out_prefix + ".csv" / ".svg", scatter colored by
// label. Needs at least 10 rows. Returns the 2-D coordinates.
Eigen::MatrixXd project_2d(const Eigen::MatrixXd& latents, const std::vector<int>& labels,
                           const std::string& out_prefix, const TsneConfig& cfg = {});

// Label-colored scatter plot; points is N x 2.
void write_scatter_svg(const std::string& path, const Eigen::MatrixXd& points,
                       const std::vector<int>& labels, const std::string& x_label,
                       const std::string& y_label, const std::string& title);

}  // namespace llost
