#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "llost/nn.hpp"
#include "llost/rng.hpp"

namespace testutil {

// Scratch directory that deletes itself, so suites can run in any order
// and re-run without stale artifacts.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("llost_test_" + tag + "_" + std::to_string(llost::Rng::derive_seed(0x7e57, std::hash<std::string>{}(tag)) % 100000000));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string str() const { return path.string(); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// Overwrite every parameter in the registry with small random values,
// including zero-initialized last layers, so flows stop being the identity.
inline void randomize_params(llost::ParamRegistry& reg, llost::Rng& rng, double scale = 0.1) {
    for (const auto& [name, p] : reg.all()) {
        for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
            for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
                p->value(i, j) = scale * rng.normal();
            }
        }
    }
}

// Central finite difference of a scalar loss with respect to one parameter
// entry. The loss callable must be deterministic (re-seed any rng inside).
inline double fd_derivative(const std::function<double()>& loss, double& slot, double h = 1e-5) {
    const double keep = slot;
    slot = keep + h;
    const double up = loss();
    slot = keep - h;
    const double dn = loss();
    slot = keep;
    return (up - dn) / (2.0 * h);
}

inline double rel_err(double got, double want) {
    const double denom = std::max({std::abs(got), std::abs(want), 1e-8});
    return std::abs(got - want) / denom;
}

// Spread probe positions over a parameter matrix deterministically.
inline std::vector<std::pair<int, int>> probe_entries(const Eigen::MatrixXd& m, int k,
                                                      std::uint64_t seed) {
    llost::Rng rng(seed);
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < k; ++i) {
        out.emplace_back(rng.uniform_int(static_cast<int>(m.rows())),
                         rng.uniform_int(static_cast<int>(m.cols())));
    }
    return out;
}

}  // namespace testutil
