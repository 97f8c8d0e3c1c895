#include "llost/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "llost/point_cloud.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace llost {

namespace {

constexpr const char* kSplitNames[3] = {"train", "val", "test"};

void write_profiles_csv(const std::string& path, const std::vector<GenSample>& data,
                        const std::vector<int>& idx, int vocab, int n_types) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    json header;
    header["vocab_size"] = vocab;
    header["n_types"] = n_types;
    std::vector<std::string> genes(static_cast<size_t>(vocab));
    for (int g = 0; g < vocab; ++g) genes[static_cast<size_t>(g)] = "g" + std::to_string(g);
    header["gene_names"] = genes;
    out << "#" << header.dump() << "\n";
    out << "id,label";
    for (int g = 0; g < vocab; ++g) out << ",g" << g;
    out << "\n";
    for (int i : idx) {
        const PairedSample& s = data[static_cast<size_t>(i)].sample;
        out << s.id << "," << s.label;
        for (int g = 0; g < vocab; ++g) out << "," << s.counts[g];
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

const Dataset& DatasetBundle::split(const std::string& name) const {
    if (name == "train") return train;
    if (name == "val") return val;
    if (name == "test") return test;
    throw std::invalid_argument("unknown split: " + name);
}

void write_dataset(const std::string& dir, const std::vector<GenSample>& data,
                   const SplitIndices& splits, const SynthConfig& cfg) {
    fs::create_directories(dir);
    const std::vector<int>* split_idx[3] = {&splits.train, &splits.val, &splits.test};

    json manifest;
    manifest["format"] = "llost-dataset";
    manifest["version"] = 1;
    manifest["n_types"] = cfg.n_types;
    manifest["vocab_size"] = cfg.vocab_size;
    manifest["points_per_cloud"] = cfg.points_per_cloud;
    for (int s = 0; s < 3; ++s) {
        const std::string split_dir = dir + "/" + kSplitNames[s];
        fs::create_directories(split_dir + "/clouds");
        std::vector<std::string> ids;
        for (int i : *split_idx[s]) {
            const PairedSample& ps = data[static_cast<size_t>(i)].sample;
            ids.push_back(ps.id);
            write_ply(ps.cloud, split_dir + "/clouds/" + ps.id + ".ply");
        }
        manifest["splits"][kSplitNames[s]] = ids;
        write_profiles_csv(split_dir + "/profiles.csv", data, *split_idx[s], cfg.vocab_size,
                           cfg.n_types);
    }
    {
        std::ofstream out(dir + "/manifest.json");
        if (!out) throw std::runtime_error("cannot write manifest.json");
        out << manifest.dump(2) << "\n";
    }
    {
        // Generator factors live outside the manifest schema on purpose:
        // nothing on the model path ever lists or reads this file.
        std::ofstream out(dir + "/truth.csv");
        if (!out) throw std::runtime_error("cannot write truth.csv");
        out << "id,u0,u1,u2,u3\n";
        out.precision(17);
        for (const auto& gs : data) {
            out << gs.sample.id << "," << gs.factors[0] << "," << gs.factors[1] << ","
                << gs.factors[2] << "," << gs.factors[3] << "\n";
        }
    }
}

namespace {

Dataset load_split_dir(const std::string& dir, const std::vector<std::string>& ids) {
    Dataset ds;
    const std::string csv_path = dir + "/profiles.csv";
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot open " + csv_path);
    std::string line;
    if (!std::getline(in, line) || line.empty() || line[0] != '#') {
        throw std::runtime_error(csv_path + ": missing JSON header line");
    }
    json header = json::parse(line.substr(1));
    ds.vocab = header.at("vocab_size").get<int>();
    ds.n_types = header.at("n_types").get<int>();
    ds.gene_names = header.at("gene_names").get<std::vector<std::string>>();
    if (static_cast<int>(ds.gene_names.size()) != ds.vocab) {
        throw std::runtime_error(csv_path + ": gene_names length != vocab_size");
    }
    std::getline(in, line);  // column names

    std::map<std::string, std::pair<int, Eigen::VectorXi>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string id, tok;
        if (!std::getline(ls, id, ',')) throw std::runtime_error(csv_path + ": bad row");
        if (!std::getline(ls, tok, ',')) throw std::runtime_error(csv_path + ": bad row");
        const int label = std::stoi(tok);
        Eigen::VectorXi counts(ds.vocab);
        for (int g = 0; g < ds.vocab; ++g) {
            if (!std::getline(ls, tok, ',')) {
                throw std::runtime_error(csv_path + ": row with too few counts");
            }
            counts[g] = std::stoi(tok);
            if (counts[g] < 0) throw std::runtime_error(csv_path + ": negative count");
        }
        rows[id] = {label, std::move(counts)};
    }

    for (const auto& id : ids) {
        auto it = rows.find(id);
        if (it == rows.end()) throw std::runtime_error(csv_path + ": missing profile for " + id);
        PairedSample s;
        s.id = id;
        s.label = it->second.first;
        s.counts = it->second.second;
        s.cloud = read_ply(dir + "/clouds/" + id + ".ply");
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace

DatasetBundle load_dataset(const std::string& dir) {
    std::ifstream in(dir + "/manifest.json");
    if (!in) throw std::runtime_error("cannot open " + dir + "/manifest.json");
    json manifest = json::parse(in);
    if (manifest.at("format").get<std::string>() != "llost-dataset") {
        throw std::runtime_error(dir + ": not a dataset directory");
    }
    DatasetBundle b;
    b.n_types = manifest.at("n_types").get<int>();
    b.vocab = manifest.at("vocab_size").get<int>();
    b.points_per_cloud = manifest.at("points_per_cloud").get<int>();
    Dataset* dsts[3] = {&b.train, &b.val, &b.test};
    for (int s = 0; s < 3; ++s) {
        const auto ids = manifest.at("splits").at(kSplitNames[s]).get<std::vector<std::string>>();
        *dsts[s] = load_split_dir(dir + "/" + kSplitNames[s], ids);
    }
    return b;
}

std::map<std::string, Eigen::Vector4d> read_truth(const std::string& dir) {
    std::ifstream in(dir + "/truth.csv");
    if (!in) throw std::runtime_error("cannot open " + dir + "/truth.csv");
    std::string line;
    std::getline(in, line);  // header
    std::map<std::string, Eigen::Vector4d> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string id, tok;
        std::getline(ls, id, ',');
        Eigen::Vector4d u;
        for (int i = 0; i < 4; ++i) {
            std::getline(ls, tok, ',');
            u[i] = std::stod(tok);
        }
        out[id] = u;
    }
    return out;
}

Batch make_batch(const Dataset& ds, const std::vector<int>& indices) {
    if (indices.empty()) throw std::invalid_argument("make_batch: empty index list");
    const int b = static_cast<int>(indices.size());
    const int n = static_cast<int>(ds.samples[static_cast<size_t>(indices[0])].cloud.rows());
    Batch out;
    out.n_points = n;
    out.clouds.resize(static_cast<Eigen::Index>(b) * n, 3);
    out.cloud_list.resize(static_cast<size_t>(b));
    out.counts.resize(b, ds.vocab);
    out.occurrence.resize(b, ds.vocab);
    out.one_hot = Eigen::MatrixXd::Zero(b, ds.n_types);
    out.tml.resize(static_cast<size_t>(b));
    for (int i = 0; i < b; ++i) {
        const PairedSample& s = ds.samples[static_cast<size_t>(indices[static_cast<size_t>(i)])];
        if (s.cloud.rows() != n) {
            throw std::invalid_argument("make_batch: clouds must share a point count");
        }
        const Cloud norm = normalize_cloud(s.cloud);
        out.clouds.middleRows(static_cast<Eigen::Index>(i) * n, n) = norm;
        out.cloud_list[static_cast<size_t>(i)] = norm;
        double t = 0.0;
        for (int g = 0; g < ds.vocab; ++g) {
            const double c = static_cast<double>(s.counts[g]);
            out.counts(i, g) = c;
            out.occurrence(i, g) = c > 0.0 ? 1.0 : 0.0;
            t += c;
        }
        out.tml[static_cast<size_t>(i)] = t;
        if (s.label < 0 || s.label >= ds.n_types) {
            throw std::invalid_argument("make_batch: label out of range");
        }
        out.one_hot(i, s.label) = 1.0;
    }
    return out;
}

}  // namespace llost
