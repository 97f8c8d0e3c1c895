#pragma once

#include <json.hpp>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "llost/cvae.hpp"
#include "llost/model.hpp"

namespace llost {

// JSON bindings for the config structs. Reading tolerates missing fields
// (they keep their defaults) so user-written config files can stay minimal.
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const CvaeConfig& c);
void from_json(const nlohmann::json& j, CvaeConfig& c);

Likelihood parse_likelihood(const std::string& s);
std::string likelihood_name(Likelihood lik);

// One row of the training-curve log; split is "train" or "val". The
// component columns hold the epoch-mean objective terms (baselines map their
// recon/kl onto the mutation-side columns).
struct TrainCurveRow {
    int epoch = 0;
    std::string split;
    double perplexity = 0.0;
    double recon_m = 0.0, recon_i = 0.0;
    double mmd_m = 0.0, mmd_i = 0.0;
    double kl_m = 0.0, kl_i = 0.0;
    double total = 0.0;
};

// Everything needed to restart training mid-run. Stored as one file: an
// 8-byte magic, a length-prefixed JSON manifest (configs, counters, rng
// state, curve history, tensor name/shape/offset table), then the raw
// little-endian float64 blob. Single-file layout keeps the
// write-temp-then-rename atomic.
struct CheckpointData {
    std::string kind;  // "llost" or "cvae"
    nlohmann::json model_config;
    nlohmann::json train_config;
    int epoch = 0;       // completed epochs
    int best_epoch = -1;
    double best_val = 0.0;
    std::string rng_state;
    Adam::State adam;
    std::map<std::string, ad::Mat> tensors;
    std::vector<TrainCurveRow> curves;
};

void save_checkpoint(const std::string& path, const CheckpointData& d);
CheckpointData load_checkpoint(const std::string& path);

// Rebuild a model from a loaded checkpoint: construct from the stored config,
// then overwrite the fresh parameters with the stored ones. Throws when the
// checkpoint kind does not match.
std::unique_ptr<LlostModel> make_llost_from_checkpoint(const CheckpointData& d);
std::unique_ptr<CvaeModel> make_cvae_from_checkpoint(const CheckpointData& d);

std::map<std::string, ad::Mat> snapshot_params(const ParamRegistry& reg);
// Strict: every registry entry must be present with matching shape, and the
// snapshot may not contain unknown names.
void restore_params(ParamRegistry& reg, const std::map<std::string, ad::Mat>& tensors);

// Stable content hash used in run manifests.
std::uint64_t fnv1a64(const std::string& s);

}  // namespace llost
