#include "llost/evalcli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace llost {

namespace {

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    return f;
}

Batch whole_split(const Dataset& ds) {
    std::vector<int> idx(ds.samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    return make_batch(ds, idx);
}

}  // namespace

void to_json(nlohmann::json& j, const MetricReport& r) {
    std::vector<double> errs(r.tml_errors.data(), r.tml_errors.data() + r.tml_errors.size());
    j = nlohmann::json{{"n_samples", r.n_samples},
                       {"log_perplexity", r.log_perplexity},
                       {"n_zero_tml_excluded", r.n_zero_tml_excluded},
                       {"rmse", r.rmse},
                       {"tml_errors", errs},
                       {"tml_error_mean", r.tml_error_mean},
                       {"tml_abs_error_mean", r.tml_abs_error_mean},
                       {"tml_error_mean_low_burden", r.tml_error_mean_low_burden},
                       {"n_low_burden", r.n_low_burden},
                       {"f1", r.f1},
                       {"ppv", r.ppv},
                       {"ppv_defined", r.ppv_defined},
                       {"ppv_mean", r.ppv_mean},
                       {"ppv_std", r.ppv_std},
                       {"n_bootstrap", r.n_bootstrap},
                       {"bootstrap_seed", r.bootstrap_seed},
                       {"tp", r.tp},
                       {"fp", r.fp},
                       {"fn", r.fn},
                       {"tn", r.tn}};
}

MetricReport report_from_artifacts(const Eigen::MatrixXd& expected_counts,
                                   const Eigen::MatrixXd& occurrence,
                                   const Eigen::VectorXd& logliks, const Dataset& truth,
                                   int n_bootstrap, std::uint64_t seed) {
    const int n = static_cast<int>(expected_counts.rows());
    if (n == 0) throw std::runtime_error("empty evaluation split");
    if (static_cast<int>(truth.samples.size()) != n || occurrence.rows() != n ||
        logliks.size() != n)
        throw std::runtime_error("artifact row counts disagree with the dataset");

    const Batch t = whole_split(truth);
    MetricReport r;
    r.n_samples = n;
    r.rmse = rmse(expected_counts, t.counts);
    r.tml_errors = tml_errors(expected_counts, t.counts);
    r.tml_error_mean = r.tml_errors.mean();
    r.tml_abs_error_mean = r.tml_errors.cwiseAbs().mean();
    double low_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        if (t.tml[i] < 400.0) {
            low_sum += r.tml_errors(i);
            ++r.n_low_burden;
        }
    }
    r.tml_error_mean_low_burden = r.n_low_burden > 0 ? low_sum / r.n_low_burden : 0.0;

    const Eigen::MatrixXd binary = (occurrence.array() >= 0.5).cast<double>();
    const OccurrenceMetrics om = occurrence_metrics(binary, t.occurrence);
    r.f1 = om.f1;
    r.ppv = om.ppv;
    r.ppv_defined = om.ppv_defined;
    r.tp = om.tp;
    r.fp = om.fp;
    r.fn = om.fn;
    r.tn = om.tn;
    r.n_bootstrap = n_bootstrap;
    r.bootstrap_seed = seed;
    if (n >= 2 && n_bootstrap > 0) {
        const auto [mean, sd] = ppv_bootstrap(binary, t.occurrence, n_bootstrap, seed);
        r.ppv_mean = mean;
        r.ppv_std = sd;
    } else {
        r.ppv_mean = om.ppv;
        r.ppv_std = 0.0;
    }

    const Eigen::VectorXd tml =
        Eigen::Map<const Eigen::VectorXd>(t.tml.data(), static_cast<int>(t.tml.size()));
    r.log_perplexity = log_perplexity(logliks, tml, &r.n_zero_tml_excluded);
    return r;
}

namespace {

template <typename ModelT>
EvalArtifacts eval_impl(const ModelT& model, const Dataset& ds, int batch_size, int n_bootstrap,
                        std::uint64_t seed) {
    const int n = static_cast<int>(ds.samples.size());
    if (n == 0) throw std::runtime_error("empty evaluation split");
    const int v = ds.vocab;
    EvalArtifacts a;
    a.expected_counts.resize(n, v);
    a.occurrence.resize(n, v);
    a.logliks.resize(n);
    a.ids.resize(n);
    a.labels.resize(n);

    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng pred_rng(Rng::derive_seed(seed, 1));
    for (const std::vector<int>& chunk : make_batches(idx, batch_size, 1)) {
        const Batch b = make_batch(ds, chunk);
        const PredictionResult p = model.predict(b, pred_rng, PredictMode::Occurrence);
        const Eigen::VectorXd ll = model.heldout_loglik(b);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            const int row = chunk[i];
            a.expected_counts.row(row) = p.expected_counts.row(static_cast<int>(i));
            a.occurrence.row(row) = p.occurrence.row(static_cast<int>(i));
            a.logliks(row) = ll(static_cast<int>(i));
            a.ids[row] = ds.samples[row].id;
            a.labels[row] = ds.samples[row].label;
        }
    }
    a.binary = (a.occurrence.array() >= 0.5).cast<double>();
    a.report = report_from_artifacts(a.expected_counts, a.occurrence, a.logliks, ds, n_bootstrap,
                                     Rng::derive_seed(seed, 2));
    return a;
}

}  // namespace

EvalArtifacts evaluate_model(const LlostModel& model, const Dataset& ds, int batch_size,
                             int n_bootstrap, std::uint64_t seed) {
    return eval_impl(model, ds, batch_size, n_bootstrap, seed);
}

EvalArtifacts evaluate_model(const CvaeModel& model, const Dataset& ds, int batch_size,
                             int n_bootstrap, std::uint64_t seed) {
    return eval_impl(model, ds, batch_size, n_bootstrap, seed);
}

void write_matrix_csv(const std::string& path, const std::vector<std::string>& ids,
                      const std::vector<std::string>& col_names, const Eigen::MatrixXd& m) {
    if (static_cast<int>(ids.size()) != m.rows() || static_cast<int>(col_names.size()) != m.cols())
        throw std::runtime_error("matrix csv: label sizes disagree with the matrix");
    std::ofstream f = open_out(path);
    f << "id";
    for (const std::string& c : col_names) f << ',' << c;
    f << '\n';
    for (int i = 0; i < m.rows(); ++i) {
        f << ids[i];
        for (int j = 0; j < m.cols(); ++j) f << ',' << g17(m(i, j));
        f << '\n';
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::pair<std::vector<std::string>, Eigen::MatrixXd> read_matrix_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty csv: " + path);
    const int n_cols = static_cast<int>(split_csv_line(line).size()) - 1;
    if (n_cols < 1) throw std::runtime_error("csv has no value columns: " + path);
    std::vector<std::string> ids;
    std::vector<double> vals;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != n_cols + 1)
            throw std::runtime_error("ragged csv row in " + path);
        ids.push_back(fields[0]);
        for (int j = 1; j <= n_cols; ++j) vals.push_back(std::stod(fields[j]));
    }
    const int n = static_cast<int>(ids.size());
    Eigen::MatrixXd m(n, n_cols);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n_cols; ++j) m(i, j) = vals[static_cast<std::size_t>(i) * n_cols + j];
    return {ids, m};
}

std::vector<PerSampleRow> read_per_sample_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty csv: " + path);
    std::vector<PerSampleRow> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> x = split_csv_line(line);
        if (x.size() != 6) throw std::runtime_error("ragged per-sample row in " + path);
        PerSampleRow r;
        r.id = x[0];
        r.label = std::stoi(x[1]);
        r.loglik = std::stod(x[2]);
        r.tml_true = std::stod(x[3]);
        r.tml_pred = std::stod(x[4]);
        r.tml_error = std::stod(x[5]);
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_eval_artifacts(const std::string& out_dir, const EvalArtifacts& a, const Dataset& ds) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_matrix_csv((dir / "pred_counts.csv").string(), a.ids, ds.gene_names, a.expected_counts);
    write_matrix_csv((dir / "pred_occurrence.csv").string(), a.ids, ds.gene_names, a.occurrence);

    const Batch t = whole_split(ds);
    {
        std::ofstream f = open_out((dir / "per_sample.csv").string());
        f << "id,label,loglik,tml_true,tml_pred,tml_error\n";
        for (int i = 0; i < a.report.n_samples; ++i) {
            f << a.ids[i] << ',' << a.labels[i] << ',' << g17(a.logliks(i)) << ','
              << g17(t.tml[i]) << ',' << g17(a.expected_counts.row(i).sum()) << ','
              << g17(a.report.tml_errors(i)) << '\n';
        }
    }
    {
        // Per-gene F1 alongside the micro average; blank where undefined.
        std::ofstream f = open_out((dir / "per_gene_f1.csv").string());
        f << "gene,tp,fp,fn,f1\n";
        for (int j = 0; j < ds.vocab; ++j) {
            long long tp = 0, fp = 0, fn = 0;
            for (int i = 0; i < a.binary.rows(); ++i) {
                const bool pred = a.binary(i, j) > 0.5;
                const bool truth = t.occurrence(i, j) > 0.5;
                tp += pred && truth;
                fp += pred && !truth;
                fn += !pred && truth;
            }
            f << ds.gene_names[j] << ',' << tp << ',' << fp << ',' << fn << ',';
            const long long denom = 2 * tp + fp + fn;
            if (denom > 0) f << g17(2.0 * tp / static_cast<double>(denom));
            f << '\n';
        }
    }
    {
        std::ofstream f = open_out((dir / "report.json").string());
        const nlohmann::json j = a.report;
        f << j.dump(2) << '\n';
    }
    {
        std::ofstream f = open_out((dir / "metrics.csv").string());
        const MetricReport& r = a.report;
        f << "metric,value\n";
        f << "n_samples," << r.n_samples << '\n';
        f << "log_perplexity," << g17(r.log_perplexity) << '\n';
        f << "n_zero_tml_excluded," << r.n_zero_tml_excluded << '\n';
        f << "rmse," << g17(r.rmse) << '\n';
        f << "tml_error_mean," << g17(r.tml_error_mean) << '\n';
        f << "tml_abs_error_mean," << g17(r.tml_abs_error_mean) << '\n';
        f << "tml_error_mean_low_burden," << g17(r.tml_error_mean_low_burden) << '\n';
        f << "n_low_burden," << r.n_low_burden << '\n';
        f << "f1," << g17(r.f1) << '\n';
        f << "ppv," << g17(r.ppv) << '\n';
        f << "ppv_defined," << (r.ppv_defined ? 1 : 0) << '\n';
        f << "ppv_mean," << g17(r.ppv_mean) << '\n';
        f << "ppv_std," << g17(r.ppv_std) << '\n';
        f << "n_bootstrap," << r.n_bootstrap << '\n';
        f << "tp," << r.tp << '\n';
        f << "fp," << r.fp << '\n';
        f << "fn," << r.fn << '\n';
        f << "tn," << r.tn << '\n';
    }
}

PerTypeRow per_type_eval(const Dataset& pool, int type, ModelConfig mc, const TrainConfig& tc,
                         const std::string& out_dir, int n_bootstrap, std::uint64_t seed) {
    if (type < 0 || type >= pool.n_types)
        throw std::runtime_error("per-type: type index out of range");
    std::vector<int> of_type;
    for (int i = 0; i < static_cast<int>(pool.samples.size()); ++i)
        if (pool.samples[i].label == type) of_type.push_back(i);
    const int n_type = static_cast<int>(of_type.size());
    const int n_held = static_cast<int>(std::floor(0.15 * n_type));
    if (n_held < 1)
        throw std::runtime_error("per-type: type " + std::to_string(type) + " has " +
                                 std::to_string(n_type) +
                                 " samples; 15% rounds to zero held out (needs >= 7)");

    Rng rng(seed);
    rng.shuffle(of_type);
    std::set<int> held(of_type.begin(), of_type.begin() + n_held);

    Dataset test{pool.n_types, pool.vocab, pool.gene_names, {}};
    Dataset train = test, val = test;
    for (int i : of_type)
        if (held.count(i)) test.samples.push_back(pool.samples[i]);

    // Stratified validation carve over the remaining samples; small types may
    // contribute nothing to val, which is fine as long as val stays nonempty.
    for (int k = 0; k < pool.n_types; ++k) {
        std::vector<int> rest;
        for (int i = 0; i < static_cast<int>(pool.samples.size()); ++i)
            if (pool.samples[i].label == k && !held.count(i)) rest.push_back(i);
        rng.shuffle(rest);
        const int n_val = static_cast<int>(std::floor(0.15 * static_cast<int>(rest.size())));
        for (int i = 0; i < static_cast<int>(rest.size()); ++i)
            (i < n_val ? val : train).samples.push_back(pool.samples[rest[i]]);
    }

    DatasetBundle b;
    b.train = std::move(train);
    b.val = std::move(val);
    b.test = test;
    b.n_types = pool.n_types;
    b.vocab = pool.vocab;
    b.points_per_cloud = static_cast<int>(pool.samples.front().cloud.rows());

    mc.vocab = pool.vocab;
    mc.n_types = pool.n_types;
    mc.validate();
    LlostModel model(mc);
    const FitResult fr = fit(model, b, tc, out_dir);
    const EvalArtifacts a =
        evaluate_model(model, test, tc.batch_size, n_bootstrap, Rng::derive_seed(seed, 77));
    write_eval_artifacts(out_dir, a, test);

    PerTypeRow row;
    row.type = type;
    row.n_total = n_type;
    row.n_held_out = n_held;
    row.best_epoch = fr.best_epoch;
    row.best_val_perplexity = fr.best_val_perplexity;
    row.report = a.report;
    return row;
}

namespace {

double nearest_rank(std::vector<double> sorted_vals, double q) {
    std::sort(sorted_vals.begin(), sorted_vals.end());
    const int n = static_cast<int>(sorted_vals.size());
    int k = static_cast<int>(std::ceil(q * n)) - 1;
    k = std::clamp(k, 0, n - 1);
    return sorted_vals[k];
}

}  // namespace

AblationResult ablation_run(const DatasetBundle& bundle, const ModelConfig& base,
                            const TrainConfig& tc, const std::string& out_dir, int n_bootstrap,
                            std::uint64_t seed) {
    struct VariantDef {
        std::string name;
        int shared;
        bool label;
    };
    const std::vector<VariantDef> defs = {
        {"s50", 50, true}, {"s200", 200, true}, {"nolabel", base.shared, false}};

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const Batch truth = whole_split(bundle.test);
    const int n = static_cast<int>(bundle.test.samples.size());

    AblationResult res;
    std::vector<Eigen::MatrixXd> binaries;
    for (std::size_t v = 0; v < defs.size(); ++v) {
        ModelConfig mc = base;
        mc.shared = defs[v].shared;
        mc.label_condition = defs[v].label;
        mc.validate();
        LlostModel model(mc);
        const std::string vdir = (fs::path(out_dir) / defs[v].name).string();
        const FitResult fr = fit(model, bundle, tc, vdir);
        const EvalArtifacts a = evaluate_model(model, bundle.test, tc.batch_size, n_bootstrap,
                                               Rng::derive_seed(seed, v));
        write_eval_artifacts(vdir, a, bundle.test);
        binaries.push_back(a.binary);

        AblationRow row;
        row.variant = defs[v].name;
        row.shared = mc.shared;
        row.label_condition = mc.label_condition;
        row.best_epoch = fr.best_epoch;
        row.best_val_perplexity = fr.best_val_perplexity;
        row.report = a.report;
        res.rows.push_back(std::move(row));
    }

    // Paired bootstrap: the same resampled rows score every variant, so the
    // per-draw F1 differences cancel shared sampling noise.
    std::vector<double> diffs;
    {
        std::ofstream f = open_out((fs::path(out_dir) / "boxplot_data.csv").string());
        f << "variant,draw,f1\n";
        Rng boot(Rng::derive_seed(seed, 9000));
        Eigen::MatrixXd rt(n, bundle.test.vocab), rb(n, bundle.test.vocab);
        for (int d = 0; d < n_bootstrap; ++d) {
            std::vector<int> idx(n);
            for (int i = 0; i < n; ++i) idx[i] = boot.uniform_int(n);
            for (int i = 0; i < n; ++i) rt.row(i) = truth.occurrence.row(idx[i]);
            std::vector<double> f1s(defs.size());
            for (std::size_t v = 0; v < defs.size(); ++v) {
                for (int i = 0; i < n; ++i) rb.row(i) = binaries[v].row(idx[i]);
                f1s[v] = occurrence_metrics(rb, rt).f1;
                f << defs[v].name << ',' << d << ',' << g17(f1s[v]) << '\n';
            }
            diffs.push_back(f1s[0] - f1s[1]);
        }
    }
    if (!diffs.empty()) {
        res.f1_diff_mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) /
                           static_cast<double>(diffs.size());
        res.f1_diff_lo = nearest_rank(diffs, 0.025);
        res.f1_diff_hi = nearest_rank(diffs, 0.975);
    }

    {
        std::ofstream f = open_out((fs::path(out_dir) / "ablation.csv").string());
        f << "variant,shared,label_condition,best_epoch,best_val_perplexity,f1,ppv_mean,ppv_std,"
             "rmse,log_perplexity\n";
        for (const AblationRow& r : res.rows) {
            f << r.variant << ',' << r.shared << ',' << (r.label_condition ? 1 : 0) << ','
              << r.best_epoch << ',' << g17(r.best_val_perplexity) << ',' << g17(r.report.f1)
              << ',' << g17(r.report.ppv_mean) << ',' << g17(r.report.ppv_std) << ','
              << g17(r.report.rmse) << ',' << g17(r.report.log_perplexity) << '\n';
        }
    }
    {
        nlohmann::json rows = nlohmann::json::array();
        for (const AblationRow& r : res.rows) {
            rows.push_back({{"variant", r.variant},
                            {"shared", r.shared},
                            {"label_condition", r.label_condition},
                            {"best_epoch", r.best_epoch},
                            {"best_val_perplexity", r.best_val_perplexity},
                            {"report", r.report}});
        }
        const nlohmann::json j = {{"rows", rows},
                                  {"f1_diff_s50_minus_s200",
                                   {{"mean", res.f1_diff_mean},
                                    {"lo_2_5", res.f1_diff_lo},
                                    {"hi_97_5", res.f1_diff_hi}}},
                                  {"n_bootstrap", n_bootstrap},
                                  {"seed", seed}};
        std::ofstream f = open_out((fs::path(out_dir) / "ablation.json").string());
        f << j.dump(2) << '\n';
    }
    return res;
}

namespace {

const char* kPalette[12] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
                            "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#1170aa", "#a3cce9"};

std::string f2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string g3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

}  // namespace

void write_scatter_svg(const std::string& path, const Eigen::MatrixXd& points,
                       const std::vector<int>& labels, const std::string& x_label,
                       const std::string& y_label, const std::string& title) {
    if (points.cols() != 2 || static_cast<int>(labels.size()) != points.rows())
        throw std::runtime_error("scatter: points must be N x 2 with one label per row");
    const int n = static_cast<int>(points.rows());

    double x0 = points.col(0).minCoeff(), x1 = points.col(0).maxCoeff();
    double y0 = points.col(1).minCoeff(), y1 = points.col(1).maxCoeff();
    const double xpad = std::max((x1 - x0) * 0.05, 1e-9), ypad = std::max((y1 - y0) * 0.05, 1e-9);
    x0 -= xpad;
    x1 += xpad;
    y0 -= ypad;
    y1 += ypad;

    const double w = 720, h = 560, ml = 70, mr = 150, mt = 50, mb = 60;
    const double pw = w - ml - mr, ph = h - mt - mb;
    const auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
    const auto py = [&](double y) { return mt + (y1 - y) / (y1 - y0) * ph; };

    std::set<int> uniq(labels.begin(), labels.end());

    std::ofstream f = open_out(path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
    f << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    f << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#333\"/>\n";
    f << "<text x=\"" << ml + pw / 2 << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " font-size=\"16\">" << title << "</text>\n";

    for (int t = 0; t <= 4; ++t) {
        const double fx = x0 + (x1 - x0) * t / 4.0, fy = y0 + (y1 - y0) * t / 4.0;
        f << "<text x=\"" << f2(px(fx)) << "\" y=\"" << h - mb + 18
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << g3(fx)
          << "</text>\n";
        f << "<text x=\"" << ml - 8 << "\" y=\"" << f2(py(fy) + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << g3(fy)
          << "</text>\n";
    }
    f << "<text x=\"" << ml + pw / 2 << "\" y=\"" << h - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label
      << "</text>\n";
    f << "<text x=\"20\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 20 "
      << mt + ph / 2 << ")\">" << y_label << "</text>\n";

    for (int i = 0; i < n; ++i) {
        f << "<circle cx=\"" << f2(px(points(i, 0))) << "\" cy=\"" << f2(py(points(i, 1)))
          << "\" r=\"4\" fill=\"" << kPalette[labels[i] % 12] << "\" fill-opacity=\"0.8\"/>\n";
    }

    double ly = mt + 10;
    for (int lab : uniq) {
        f << "<circle cx=\"" << w - mr + 18 << "\" cy=\"" << ly << "\" r=\"5\" fill=\""
          << kPalette[lab % 12] << "\"/>\n";
        f << "<text x=\"" << w - mr + 30 << "\" y=\"" << ly + 4
          << "\" font-family=\"sans-serif\" font-size=\"12\">type " << lab << "</text>\n";
        ly += 20;
    }
    f << "</svg>\n";
    if (!f) throw std::runtime_error("write failed: " + path);
}

Eigen::MatrixXd project_2d(const Eigen::MatrixXd& latents, const std::vector<int>& labels,
                           const std::string& out_prefix, const TsneConfig& cfg) {
    if (latents.rows() < 10)
        throw std::runtime_error("project_2d: needs at least 10 latents");
    if (static_cast<int>(labels.size()) != latents.rows())
        throw std::runtime_error("project_2d: one label per latent row");

    const Eigen::MatrixXd y = tsne_embed(latents, cfg);
    {
        std::ofstream f = open_out(out_prefix + ".csv");
        f << "index,label,x,y\n";
        for (int i = 0; i < y.rows(); ++i)
            f << i << ',' << labels[i] << ',' << g17(y(i, 0)) << ',' << g17(y(i, 1)) << '\n';
    }
    write_scatter_svg(out_prefix + ".svg", y, labels, "tsne-1", "tsne-2",
                      "2-D latent projection");
    return y;
}

}  // namespace llost
