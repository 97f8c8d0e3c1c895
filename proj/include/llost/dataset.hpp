#pragma once

#include <map>
#include <string>
#include <vector>

#include "llost/synthdata.hpp"

namespace llost {

// One split held in memory. Clouds are stored as written (raw coordinates);
// batch assembly normalizes them for the model.
struct Dataset {
    int n_types = 0;
    int vocab = 0;
    std::vector<std::string> gene_names;
    std::vector<PairedSample> samples;
};

struct DatasetBundle {
    Dataset train, val, test;
    int n_types = 0;
    int vocab = 0;
    int points_per_cloud = 0;

    const Dataset& split(const std::string& name) const;
};

// Layout under dir:
//   manifest.json               ids per split, V, K, cloud size
//   {train,val,test}/profiles.csv   JSON header line, then id,label,counts...
//   {train,val,test}/clouds/<id>.ply
//   truth.csv                   generator factors; not referenced by the
//                               manifest so the loader never touches it
void write_dataset(const std::string& dir, const std::vector<GenSample>& data,
                   const SplitIndices& splits, const SynthConfig& cfg);

DatasetBundle load_dataset(const std::string& dir);

// Oracle-side access to the stored generator factors (tests only).
std::map<std::string, Eigen::Vector4d> read_truth(const std::string& dir);

// Model-facing view of a set of samples, rows aligned across fields.
struct Batch {
    int n_points = 0;                  // points per cloud (uniform)
    Eigen::MatrixXd clouds;            // (B*n_points) x 3, normalized
    std::vector<Eigen::MatrixXd> cloud_list;  // per-sample n_points x 3, normalized
    Eigen::MatrixXd counts;            // B x V
    Eigen::MatrixXd occurrence;        // B x V in {0,1}
    Eigen::MatrixXd one_hot;           // B x K
    std::vector<double> tml;           // per-sample sum of counts

    int size() const { return static_cast<int>(one_hot.rows()); }
};

Batch make_batch(const Dataset& ds, const std::vector<int>& indices);

}  // namespace llost
