#include "llost/rng.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace llost {

int Rng::uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    // Rejection to erase modulo bias.
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return static_cast<int>(x % un);
}

double Rng::normal() {
    // Box-Muller without caching the second variate: one fewer piece of state
    // to serialize, and draw order stays independent of call history.
    double u1 = uniform_pos();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
        // Boost shape by 1, then scale back (Marsaglia-Tsang trick).
        double g = gamma(shape + 1.0);
        double u = uniform_pos();
        return g * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        double u = uniform_pos();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

int Rng::poisson(double lambda) {
    if (lambda < 0.0 || !std::isfinite(lambda)) {
        throw std::invalid_argument("poisson: lambda must be finite and nonnegative");
    }
    // Inversion in chunks of at most 30 so exp() stays in range for any lambda.
    int total = 0;
    while (lambda > 0.0) {
        double chunk = lambda > 30.0 ? 30.0 : lambda;
        lambda -= chunk;
        double l = std::exp(-chunk);
        double p = 1.0;
        int k = 0;
        do {
            ++k;
            p *= uniform_pos();
        } while (p > l);
        total += k - 1;
    }
    return total;
}

int Rng::negative_binomial(double r, double p) {
    if (!(r > 0.0)) throw std::invalid_argument("negative_binomial: r must be positive");
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("negative_binomial: p must be in [0,1)");
    if (p == 0.0) return 0;
    // Gamma-Poisson mixture: lambda ~ Gamma(r, scale p/(1-p)), m ~ Poisson(lambda).
    double lambda = gamma(r) * (p / (1.0 - p));
    return poisson(lambda);
}

std::vector<int> Rng::permutation(int n) {
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i) v[i] = i;
    shuffle(v);
    return v;
}

void Rng::shuffle(std::vector<int>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
        int j = uniform_int(i + 1);
        std::swap(v[i], v[j]);
    }
}

std::string Rng::state() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
}

void Rng::set_state(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
    if (is.fail()) throw std::runtime_error("Rng::set_state: malformed engine state");
}

std::uint64_t Rng::derive_seed(std::uint64_t base, std::uint64_t index) {
    // splitmix64 finalizer over base + golden-ratio stride.
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace llost
