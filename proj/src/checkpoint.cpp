#include "llost/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace llost {

namespace {
constexpr char kMagic[8] = {'L', 'L', 'O', 'S', 'T', 'C', 'K', '1'};
}

Likelihood parse_likelihood(const std::string& s) {
    if (s == "nb") return Likelihood::NB;
    if (s == "bernoulli") return Likelihood::Bernoulli;
    throw std::invalid_argument("unknown likelihood '" + s + "' (want nb or bernoulli)");
}

std::string likelihood_name(Likelihood lik) {
    return lik == Likelihood::NB ? "nb" : "bernoulli";
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = nlohmann::json{{"vocab", c.vocab},
                       {"n_types", c.n_types},
                       {"likelihood", likelihood_name(c.likelihood)},
                       {"shared", c.shared},
                       {"lesion_latent", c.lesion_latent},
                       {"dec_points", c.dec_points},
                       {"label_condition", c.label_condition},
                       {"shared_steps", c.shared_steps},
                       {"shared_blocks", c.shared_blocks},
                       {"prior_steps", c.prior_steps},
                       {"prior_blocks", c.prior_blocks},
                       {"scale_clamp", c.scale_clamp},
                       {"mmd_bandwidth", c.mmd_bandwidth},
                       {"init_seed", c.init_seed}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    c.vocab = j.value("vocab", c.vocab);
    c.n_types = j.value("n_types", c.n_types);
    if (j.contains("likelihood")) {
        c.likelihood = parse_likelihood(j.at("likelihood").get<std::string>());
    }
    c.shared = j.value("shared", c.shared);
    c.lesion_latent = j.value("lesion_latent", c.lesion_latent);
    c.dec_points = j.value("dec_points", c.dec_points);
    c.label_condition = j.value("label_condition", c.label_condition);
    c.shared_steps = j.value("shared_steps", c.shared_steps);
    c.shared_blocks = j.value("shared_blocks", c.shared_blocks);
    c.prior_steps = j.value("prior_steps", c.prior_steps);
    c.prior_blocks = j.value("prior_blocks", c.prior_blocks);
    c.scale_clamp = j.value("scale_clamp", c.scale_clamp);
    c.mmd_bandwidth = j.value("mmd_bandwidth", c.mmd_bandwidth);
    c.init_seed = j.value("init_seed", c.init_seed);
}

void to_json(nlohmann::json& j, const CvaeConfig& c) {
    j = nlohmann::json{{"vocab", c.vocab},
                       {"n_types", c.n_types},
                       {"likelihood", likelihood_name(c.likelihood)},
                       {"latent", c.latent},
                       {"prior_steps", c.prior_steps},
                       {"prior_blocks", c.prior_blocks},
                       {"scale_clamp", c.scale_clamp},
                       {"init_seed", c.init_seed}};
}

void from_json(const nlohmann::json& j, CvaeConfig& c) {
    c.vocab = j.value("vocab", c.vocab);
    c.n_types = j.value("n_types", c.n_types);
    if (j.contains("likelihood")) {
        c.likelihood = parse_likelihood(j.at("likelihood").get<std::string>());
    }
    c.latent = j.value("latent", c.latent);
    c.prior_steps = j.value("prior_steps", c.prior_steps);
    c.prior_blocks = j.value("prior_blocks", c.prior_blocks);
    c.scale_clamp = j.value("scale_clamp", c.scale_clamp);
    c.init_seed = j.value("init_seed", c.init_seed);
}

namespace {

nlohmann::json curve_to_json(const TrainCurveRow& r) {
    return nlohmann::json{{"epoch", r.epoch},     {"split", r.split},
                          {"perplexity", r.perplexity}, {"recon_m", r.recon_m},
                          {"recon_i", r.recon_i}, {"mmd_m", r.mmd_m},
                          {"mmd_i", r.mmd_i},     {"kl_m", r.kl_m},
                          {"kl_i", r.kl_i},       {"total", r.total}};
}

TrainCurveRow curve_from_json(const nlohmann::json& j) {
    TrainCurveRow r;
    r.epoch = j.at("epoch").get<int>();
    r.split = j.at("split").get<std::string>();
    r.perplexity = j.at("perplexity").get<double>();
    r.recon_m = j.at("recon_m").get<double>();
    r.recon_i = j.at("recon_i").get<double>();
    r.mmd_m = j.at("mmd_m").get<double>();
    r.mmd_i = j.at("mmd_i").get<double>();
    r.kl_m = j.at("kl_m").get<double>();
    r.kl_i = j.at("kl_i").get<double>();
    r.total = j.at("total").get<double>();
    return r;
}

void append_tensor_entries(nlohmann::json& table, const std::string& prefix,
                           const std::map<std::string, ad::Mat>& tensors,
                           std::uint64_t& offset) {
    for (const auto& [name, m] : tensors) {
        table.push_back({{"name", prefix + name},
                         {"rows", m.rows()},
                         {"cols", m.cols()},
                         {"offset", offset}});
        offset += static_cast<std::uint64_t>(m.size()) * sizeof(double);
    }
}

void write_tensor_blobs(std::ofstream& out, const std::map<std::string, ad::Mat>& tensors) {
    for (const auto& [name, m] : tensors) {
        out.write(reinterpret_cast<const char*>(m.data()),
                  static_cast<std::streamsize>(m.size() * sizeof(double)));
    }
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointData& d) {
    nlohmann::json meta;
    meta["format"] = "llost-checkpoint";
    meta["version"] = 1;
    meta["kind"] = d.kind;
    meta["model_config"] = d.model_config;
    meta["train_config"] = d.train_config;
    meta["epoch"] = d.epoch;
    meta["best_epoch"] = d.best_epoch;
    meta["best_val"] = d.best_val;
    meta["rng_state"] = d.rng_state;
    meta["adam_t"] = d.adam.t;
    nlohmann::json curves = nlohmann::json::array();
    for (const auto& r : d.curves) curves.push_back(curve_to_json(r));
    meta["curves"] = curves;

    nlohmann::json table = nlohmann::json::array();
    std::uint64_t offset = 0;
    append_tensor_entries(table, "param/", d.tensors, offset);
    append_tensor_entries(table, "adam_m/", d.adam.m, offset);
    append_tensor_entries(table, "adam_v/", d.adam.v, offset);
    meta["tensors"] = table;

    const std::string body = meta.dump();
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open checkpoint temp file " + tmp);
        out.write(kMagic, 8);
        const std::uint64_t len = body.size();
        out.write(reinterpret_cast<const char*>(&len), sizeof(len));
        out.write(body.data(), static_cast<std::streamsize>(body.size()));
        write_tensor_blobs(out, d.tensors);
        write_tensor_blobs(out, d.adam.m);
        write_tensor_blobs(out, d.adam.v);
        if (!out) throw std::runtime_error("short write to " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw std::runtime_error("cannot rename checkpoint into place: " + path);
    }
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        throw std::runtime_error("not a checkpoint file: " + path);
    }
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string body(len, '\0');
    in.read(body.data(), static_cast<std::streamsize>(len));
    if (!in) throw std::runtime_error("truncated checkpoint manifest in " + path);
    const nlohmann::json meta = nlohmann::json::parse(body);
    if (meta.value("format", "") != "llost-checkpoint") {
        throw std::runtime_error("unexpected checkpoint format in " + path);
    }

    CheckpointData d;
    d.kind = meta.at("kind").get<std::string>();
    d.model_config = meta.at("model_config");
    d.train_config = meta.at("train_config");
    d.epoch = meta.at("epoch").get<int>();
    d.best_epoch = meta.at("best_epoch").get<int>();
    d.best_val = meta.at("best_val").get<double>();
    d.rng_state = meta.at("rng_state").get<std::string>();
    d.adam.t = meta.at("adam_t").get<long long>();
    for (const auto& c : meta.at("curves")) d.curves.push_back(curve_from_json(c));

    const std::streampos blob_start = in.tellg();
    for (const auto& e : meta.at("tensors")) {
        const std::string full = e.at("name").get<std::string>();
        const auto rows = e.at("rows").get<Eigen::Index>();
        const auto cols = e.at("cols").get<Eigen::Index>();
        const auto offset = e.at("offset").get<std::uint64_t>();
        ad::Mat m(rows, cols);
        in.seekg(blob_start + static_cast<std::streamoff>(offset));
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
        if (!in) throw std::runtime_error("truncated tensor " + full + " in " + path);
        if (full.rfind("param/", 0) == 0) {
            d.tensors[full.substr(6)] = std::move(m);
        } else if (full.rfind("adam_m/", 0) == 0) {
            d.adam.m[full.substr(7)] = std::move(m);
        } else if (full.rfind("adam_v/", 0) == 0) {
            d.adam.v[full.substr(7)] = std::move(m);
        } else {
            throw std::runtime_error("unknown tensor section for " + full);
        }
    }
    return d;
}

std::map<std::string, ad::Mat> snapshot_params(const ParamRegistry& reg) {
    std::map<std::string, ad::Mat> out;
    for (const auto& [name, var] : reg.all()) out[name] = var->value;
    return out;
}

void restore_params(ParamRegistry& reg, const std::map<std::string, ad::Mat>& tensors) {
    if (tensors.size() != reg.all().size()) {
        throw std::runtime_error("checkpoint parameter count mismatch");
    }
    for (const auto& [name, var] : reg.all()) {
        const auto it = tensors.find(name);
        if (it == tensors.end()) throw std::runtime_error("checkpoint missing tensor " + name);
        if (it->second.rows() != var->value.rows() || it->second.cols() != var->value.cols()) {
            throw std::runtime_error("checkpoint shape mismatch for " + name);
        }
        var->value = it->second;
    }
}

std::unique_ptr<LlostModel> make_llost_from_checkpoint(const CheckpointData& d) {
    if (d.kind != "llost")
        throw std::runtime_error("checkpoint holds a '" + d.kind + "' model, expected 'llost'");
    const ModelConfig cfg = d.model_config.get<ModelConfig>();
    auto model = std::make_unique<LlostModel>(cfg);
    restore_params(model->params(), d.tensors);
    return model;
}

std::unique_ptr<CvaeModel> make_cvae_from_checkpoint(const CheckpointData& d) {
    if (d.kind != "cvae")
        throw std::runtime_error("checkpoint holds a '" + d.kind + "' model, expected 'cvae'");
    const CvaeConfig cfg = d.model_config.get<CvaeConfig>();
    auto model = std::make_unique<CvaeModel>(cfg);
    restore_params(model->params(), d.tensors);
    return model;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace llost
