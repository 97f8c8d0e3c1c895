#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace llost {

// Deterministic random source. Only the raw mt19937_64 engine comes from the
// standard library; every distribution is implemented here so a given seed
// yields the same stream regardless of the stdlib's distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // (0, 1]
    double uniform_pos() { return 1.0 - uniform(); }

    // [0, n)
    int uniform_int(int n);

    double normal();                       // Box-Muller, no cached state
    double gamma(double shape);            // unit scale, Marsaglia-Tsang
    int poisson(double lambda);            // inversion, chunked for large lambda
    // Convention: pmf(m) = Gamma(m+r)/(Gamma(r) m!) p^m (1-p)^r, so P(0) = (1-p)^r.
    int negative_binomial(double r, double p);

    std::vector<int> permutation(int n);
    void shuffle(std::vector<int>& v);

    // Engine state as text, for checkpoint resume.
    std::string state() const;
    void set_state(const std::string& s);

    // Derive an independent per-item seed from a base seed (splitmix64 mix).
    static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

private:
    std::mt19937_64 eng_;
};

}  // namespace llost
