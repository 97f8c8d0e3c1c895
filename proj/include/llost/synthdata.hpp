#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "llost/point_cloud.hpp"
#include "llost/rng.hpp"

namespace llost {

struct SynthConfig {
    int n_types = 2;
    int samples_per_type = 10;
    int vocab_size = 50;
    int points_per_cloud = 64;
    double signature_overlap = 0.0;  // fraction of signature genes shared within type pairs
    std::uint64_t seed = 0;

    void validate() const;
};

struct CancerLabel {
    int index = 0;
    int n_types = 1;
    Eigen::VectorXd one_hot() const;
};

// Model-facing sample. Deliberately excludes the generator factors so model
// code cannot touch them; see GenSample.
struct PairedSample {
    std::string id;
    int label = 0;
    Cloud cloud;             // points_per_cloud x 3
    Eigen::VectorXi counts;  // length V
};

// Generator-facing sample: the paired data plus the latent factors that
// produced it, kept for oracle tests only.
struct GenSample {
    PairedSample sample;
    Eigen::Vector4d factors;
};

// Shape of one lesion: perturbed ellipsoid with low-order spherical-harmonic
// lobulation. Radius along unit direction d:
//   R(d) = R_ellipsoid(d; exp(base_log_axes + axis_factor_scale .* u[0:3]))
//          * max(0.2, 1 + amp_scale * sigmoid(u[3]) * SH(d))
struct LesionShapeParams {
    Eigen::Vector3d base_log_axes = Eigen::Vector3d::Zero();
    Eigen::Vector3d axis_factor_scale = Eigen::Vector3d(0.25, 0.2, 0.2);
    double amp_scale = 0.25;
    Eigen::VectorXd sh_coeffs;  // 16 real spherical harmonics, l <= 3
    int mesh_subdiv = 4;
};

// Mutation generator for one type: counts[g] ~ NB(r_disp, p_g) with mean
//   mu_g = background_mu[g] + activity * signature[g]
//   activity = tml * (1 + activity_jitter * clamp(u[0], -3, 3))
// so E[TML] = sum(background_mu) + tml exactly (the jitter is symmetric).
struct MutationGenParams {
    Eigen::VectorXd background_mu;  // length V
    Eigen::VectorXd signature;      // length V, sums to 1
    double tml = 100.0;
    double r_disp = 2.0;
    double activity_jitter = 0.3;
};

struct TypeParams {
    LesionShapeParams shape;
    MutationGenParams mutation;
};

// Real spherical harmonics up to l = 3 evaluated at a unit direction.
Eigen::VectorXd sh_basis(const Eigen::Vector3d& d);

// Deterministic per-type parameters for a config. Signatures of pair
// (2j, 2j+1) share round(overlap * n_active) genes with copied weights;
// overlap 1 copies the signature verbatim.
std::vector<TypeParams> make_type_params(const SynthConfig& cfg);

double lesion_activity(const MutationGenParams& p, const Eigen::Vector4d& factors);
// Expected TML of a type under the factor distribution.
double expected_tml(const MutationGenParams& p);

Cloud gen_lesion(const LesionShapeParams& p, const Eigen::Vector4d& factors, int n_points,
                 Rng& rng);
Eigen::VectorXi gen_mutation_profile(const MutationGenParams& p, const Eigen::Vector4d& factors,
                                     int vocab_size, Rng& rng);

std::vector<GenSample> gen_dataset(const SynthConfig& cfg);

struct SplitIndices {
    std::vector<int> train, val, test;
};

// Stratified by label; per type the val/test sizes are floored and the
// remainder goes to train. A type with fewer than 3 samples cannot be
// stratified and raises StratificationError.
struct StratificationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
SplitIndices split_dataset(const std::vector<PairedSample>& samples,
                           const Eigen::Vector3d& ratios, std::uint64_t seed);

}  // namespace llost
