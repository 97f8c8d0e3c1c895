#include "llost/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "llost/mathutil.hpp"
#include "llost/mesh.hpp"

namespace llost {

namespace {

int signature_size(int vocab_size) { return std::max(4, vocab_size / 20); }

constexpr double kBackgroundTml = 10.0;
constexpr double kBaseTml = 40.0;

}  // namespace

void SynthConfig::validate() const {
    if (n_types < 2) throw std::invalid_argument("synth: n_types must be >= 2");
    if (samples_per_type < 1) throw std::invalid_argument("synth: samples_per_type must be >= 1");
    if (vocab_size < 2) throw std::invalid_argument("synth: vocab_size must be >= 2");
    if (points_per_cloud < 8) throw std::invalid_argument("synth: points_per_cloud must be >= 8");
    if (signature_overlap < 0.0 || signature_overlap > 1.0) {
        throw std::invalid_argument("synth: signature_overlap must be in [0,1]");
    }
    if (vocab_size < n_types * signature_size(vocab_size)) {
        throw std::invalid_argument("synth: vocab_size too small for " +
                                    std::to_string(n_types) + " disjoint signatures");
    }
}

Eigen::VectorXd CancerLabel::one_hot() const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n_types);
    v[index] = 1.0;
    return v;
}

Eigen::VectorXd sh_basis(const Eigen::Vector3d& d) {
    const double x = d.x(), y = d.y(), z = d.z();
    Eigen::VectorXd b(16);
    b[0] = 0.2820947917738781;
    b[1] = 0.4886025119029199 * y;
    b[2] = 0.4886025119029199 * z;
    b[3] = 0.4886025119029199 * x;
    b[4] = 1.0925484305920792 * x * y;
    b[5] = 1.0925484305920792 * y * z;
    b[6] = 0.31539156525252005 * (3.0 * z * z - 1.0);
    b[7] = 1.0925484305920792 * x * z;
    b[8] = 0.5462742152960396 * (x * x - y * y);
    b[9] = 0.5900435899266435 * y * (3.0 * x * x - y * y);
    b[10] = 2.890611442640554 * x * y * z;
    b[11] = 0.4570457994644658 * y * (5.0 * z * z - 1.0);
    b[12] = 0.3731763325901154 * z * (5.0 * z * z - 3.0);
    b[13] = 0.4570457994644658 * x * (5.0 * z * z - 1.0);
    b[14] = 1.445305721320277 * z * (x * x - y * y);
    b[15] = 0.5900435899266435 * x * (x * x - 3.0 * y * y);
    return b;
}

std::vector<TypeParams> make_type_params(const SynthConfig& cfg) {
    cfg.validate();
    const int V = cfg.vocab_size;
    const int n_active = signature_size(V);

    Rng master(Rng::derive_seed(cfg.seed, 0xA11CE));

    // Gene base rates follow a power law so a few genes dominate and the rest
    // form a long tail.
    Eigen::VectorXd pi(V);
    for (int g = 0; g < V; ++g) pi[g] = std::pow(g + 1.0, -1.5);
    pi /= pi.sum();

    // One lobulation direction shared by every type: the cloud carries the
    // per-sample factors, while type identity travels only through the label.
    Eigen::VectorXd sh(16);
    for (int i = 0; i < 16; ++i) sh[i] = master.normal();
    sh[0] = 0.0;
    sh /= sh.norm();

    // Disjoint active-gene pools per type; overlap below copies across pairs.
    std::vector<int> pool = master.permutation(V);

    std::vector<TypeParams> out(static_cast<size_t>(cfg.n_types));
    for (int k = 0; k < cfg.n_types; ++k) {
        TypeParams& tp = out[static_cast<size_t>(k)];
        tp.shape.base_log_axes = Eigen::Vector3d(0.15, 0.0, -0.15);
        tp.shape.sh_coeffs = sh;

        Rng tr(Rng::derive_seed(cfg.seed, 0xB000 + static_cast<std::uint64_t>(k)));
        Eigen::VectorXd sig = Eigen::VectorXd::Zero(V);
        std::vector<int> genes(pool.begin() + k * n_active, pool.begin() + (k + 1) * n_active);
        Eigen::VectorXd w(n_active);
        for (int i = 0; i < n_active; ++i) w[i] = tr.gamma(2.0);
        w /= w.sum();

        if (k % 2 == 1 && cfg.signature_overlap > 0.0) {
            // Pair (k-1, k) shares the first n_copy genes with identical
            // weights; the type's own remaining genes absorb the leftover mass.
            const int n_copy = static_cast<int>(std::lround(cfg.signature_overlap * n_active));
            const Eigen::VectorXd& prev = out[static_cast<size_t>(k - 1)].mutation.signature;
            const std::vector<int> prev_genes(pool.begin() + (k - 1) * n_active,
                                              pool.begin() + k * n_active);
            double copied = 0.0;
            for (int i = 0; i < n_copy; ++i) {
                sig[prev_genes[static_cast<size_t>(i)]] = prev[prev_genes[static_cast<size_t>(i)]];
                copied += prev[prev_genes[static_cast<size_t>(i)]];
            }
            double fresh = 0.0;
            for (int i = n_copy; i < n_active; ++i) fresh += w[i];
            const double scale = fresh > 0.0 ? (1.0 - copied) / fresh : 0.0;
            for (int i = n_copy; i < n_active; ++i) {
                sig[genes[static_cast<size_t>(i)]] = w[i] * scale;
            }
        } else {
            for (int i = 0; i < n_active; ++i) sig[genes[static_cast<size_t>(i)]] = w[i];
        }

        tp.mutation.background_mu = kBackgroundTml * pi;
        tp.mutation.signature = sig;
        tp.mutation.tml = kBaseTml * std::pow(2.0, k);
        tp.mutation.r_disp = 2.0;
        tp.mutation.activity_jitter = 0.3;
    }
    return out;
}

double lesion_activity(const MutationGenParams& p, const Eigen::Vector4d& factors) {
    const double u = std::clamp(factors[0], -3.0, 3.0);
    return p.tml * (1.0 + p.activity_jitter * u);
}

double expected_tml(const MutationGenParams& p) { return p.background_mu.sum() + p.tml; }

namespace {

const TriMesh& cached_icosphere(int subdiv) {
    static std::mutex mu;
    static std::map<int, TriMesh> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(subdiv);
    if (it == cache.end()) it = cache.emplace(subdiv, icosphere(subdiv)).first;
    return it->second;
}

double lesion_radius(const LesionShapeParams& p, const Eigen::Vector3d& axes, double amp,
                     const Eigen::Vector3d& d) {
    const double q = (d.array() / axes.array()).matrix().squaredNorm();
    const double r_ell = 1.0 / std::sqrt(q);
    double lob = 1.0;
    if (amp != 0.0 && p.sh_coeffs.size() == 16) {
        lob = std::max(0.2, 1.0 + amp * p.sh_coeffs.dot(sh_basis(d)));
    }
    return r_ell * lob;
}

}  // namespace

Cloud gen_lesion(const LesionShapeParams& p, const Eigen::Vector4d& factors, int n_points,
                 Rng& rng) {
    if (n_points < 8) throw std::invalid_argument("gen_lesion: n_points must be >= 8");
    const Eigen::Vector3d axes =
        (p.base_log_axes + (p.axis_factor_scale.array() * factors.head<3>().array()).matrix())
            .array()
            .exp();
    const double amp = p.amp_scale * sigmoid(factors[3]);

    // Warp the sphere triangulation, sample it area-weighted, then project
    // each sample back onto the exact parametric surface along its ray so the
    // points sit on the surface rather than on mesh chords.
    const TriMesh& base = cached_icosphere(p.mesh_subdiv);
    TriMesh warped;
    warped.vertices.reserve(base.vertices.size());
    for (const auto& v : base.vertices) {
        warped.vertices.push_back(lesion_radius(p, axes, amp, v) * v);
    }
    warped.faces = base.faces;

    Cloud raw = sample_mesh_surface(warped, n_points, rng);
    for (int i = 0; i < n_points; ++i) {
        const Eigen::Vector3d d = raw.row(i).normalized();
        raw.row(i) = (lesion_radius(p, axes, amp, d) * d).transpose();
    }
    return raw;
}

Eigen::VectorXi gen_mutation_profile(const MutationGenParams& p, const Eigen::Vector4d& factors,
                                     int vocab_size, Rng& rng) {
    if (vocab_size < 1) throw std::invalid_argument("gen_mutation_profile: vocab_size must be >= 1");
    if (p.background_mu.size() != vocab_size || p.signature.size() != vocab_size) {
        throw std::invalid_argument("gen_mutation_profile: parameter length mismatch");
    }
    const double activity = lesion_activity(p, factors);
    Eigen::VectorXi counts(vocab_size);
    for (int g = 0; g < vocab_size; ++g) {
        const double mu = p.background_mu[g] + activity * p.signature[g];
        if (mu <= 0.0) {
            counts[g] = 0;
            continue;
        }
        const double prob = mu / (mu + p.r_disp);
        counts[g] = rng.negative_binomial(p.r_disp, prob);
    }
    return counts;
}

std::vector<GenSample> gen_dataset(const SynthConfig& cfg) {
    const auto types = make_type_params(cfg);
    std::vector<GenSample> out;
    out.reserve(static_cast<size_t>(cfg.n_types) * cfg.samples_per_type);
    for (int k = 0; k < cfg.n_types; ++k) {
        for (int j = 0; j < cfg.samples_per_type; ++j) {
            const std::uint64_t idx =
                static_cast<std::uint64_t>(k) * cfg.samples_per_type + static_cast<std::uint64_t>(j);
            Rng sr(Rng::derive_seed(cfg.seed, idx));
            GenSample gs;
            for (int i = 0; i < 4; ++i) gs.factors[i] = sr.normal();
            gs.sample.id = "t" + std::to_string(k) + "_s" + std::to_string(j);
            gs.sample.label = k;
            gs.sample.counts = gen_mutation_profile(types[static_cast<size_t>(k)].mutation,
                                                    gs.factors, cfg.vocab_size, sr);
            gs.sample.cloud = gen_lesion(types[static_cast<size_t>(k)].shape, gs.factors,
                                         cfg.points_per_cloud, sr);
            out.push_back(std::move(gs));
        }
    }
    return out;
}

SplitIndices split_dataset(const std::vector<PairedSample>& samples,
                           const Eigen::Vector3d& ratios, std::uint64_t seed) {
    if ((ratios.array() < 0.0).any() || std::abs(ratios.sum() - 1.0) > 1e-9) {
        throw std::invalid_argument("split_dataset: ratios must be nonnegative and sum to 1");
    }
    std::map<int, std::vector<int>> by_label;
    for (size_t i = 0; i < samples.size(); ++i) {
        by_label[samples[i].label].push_back(static_cast<int>(i));
    }
    SplitIndices out;
    for (auto& [label, idx] : by_label) {
        const int n = static_cast<int>(idx.size());
        if (n < 3) {
            throw StratificationError("split_dataset: type " + std::to_string(label) + " has " +
                                      std::to_string(n) + " samples; stratification needs >= 3");
        }
        Rng rng(Rng::derive_seed(seed, 0x59117 + static_cast<std::uint64_t>(label)));
        rng.shuffle(idx);
        const int n_val = static_cast<int>(std::floor(n * ratios[1]));
        const int n_test = static_cast<int>(std::floor(n * ratios[2]));
        for (int i = 0; i < n; ++i) {
            if (i < n_val) out.val.push_back(idx[static_cast<size_t>(i)]);
            else if (i < n_val + n_test) out.test.push_back(idx[static_cast<size_t>(i)]);
            else out.train.push_back(idx[static_cast<size_t>(i)]);
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

}  // namespace llost
