#include "llost/distributions.hpp"

#include <cmath>
#include <stdexcept>

#include "llost/mathutil.hpp"

namespace llost {

double nb_logpmf(int m, double r, double p) {
    if (m < 0) throw std::invalid_argument("nb_logpmf: m must be nonnegative");
    if (!(r > 0.0)) throw std::invalid_argument("nb_logpmf: r must be positive");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("nb_logpmf: p must be in (0,1)");
    return std::lgamma(m + r) - std::lgamma(r) - std::lgamma(m + 1.0) + m * std::log(p) +
           r * std::log1p(-p);
}

double nb_mean(double r, double p) { return r * p / (1.0 - p); }

double nb_var(double r, double p) { return r * p / ((1.0 - p) * (1.0 - p)); }

double bernoulli_occurrence_prob(double r, double p) {
    // 1 - (1-p)^r = -expm1(r * log(1-p))
    return -std::expm1(r * std::log1p(-p));
}

double bernoulli_logpmf(const Eigen::VectorXd& b, const Eigen::VectorXd& q) {
    if (b.size() != q.size()) throw std::invalid_argument("bernoulli_logpmf: size mismatch");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        const double qi = std::min(std::max(q[i], kOccClip), 1.0 - kOccClip);
        acc += b[i] > 0.5 ? std::log(qi) : std::log1p(-qi);
    }
    return acc;
}

std::vector<int> sample_counts(const Eigen::VectorXd& r, const Eigen::VectorXd& p, Rng& rng) {
    if (r.size() != p.size()) throw std::invalid_argument("sample_counts: size mismatch");
    std::vector<int> out(static_cast<size_t>(r.size()));
    for (Eigen::Index g = 0; g < r.size(); ++g) {
        out[static_cast<size_t>(g)] = rng.negative_binomial(r[g], p[g]);
    }
    return out;
}

ad::Var nb_loglik_rows(const NbHead& head, const ad::Mat& counts) {
    using namespace ad;
    const Var r = vexp(head.log_r);
    // log p = -softplus(-u), log(1-p) = -softplus(u); exact and overflow-free.
    const Var log_p = neg(vsoftplus(neg(head.logits)));
    const Var log_1mp = neg(vsoftplus(head.logits));
    const Var c = constant(counts);

    // Gamma(m+1) term is constant in the parameters; fold it in as data.
    Mat lgamma_m1 = counts.unaryExpr([](double m) { return std::lgamma(m + 1.0); });

    Var terms = sub(vlgamma(add(c, r)), vlgamma(r));
    terms = sub(terms, constant(std::move(lgamma_m1)));
    terms = add(terms, mul(c, log_p));
    terms = add(terms, mul(r, log_1mp));
    return rowsum(terms);
}

ad::Var bernoulli_loglik_rows(const NbHead& head, const ad::Mat& occ) {
    using namespace ad;
    // a = -r log(1-p) = r * softplus(u) > 0; occurrence prob q = 1 - e^{-a}.
    // Clipping q to [kOccClip, 1-kOccClip] is a hard clamp on a.
    const double a_lo = -std::log1p(-kOccClip);
    const double a_hi = -std::log(kOccClip);
    const Var r = vexp(head.log_r);
    const Var a = clamp(mul(r, vsoftplus(head.logits)), a_lo, a_hi);
    // log q = log(1 - e^{-a}); log(1-q) = -a.
    const Var b = constant(occ);
    const Var ones = constant(Mat::Ones(occ.rows(), occ.cols()));
    Var terms = mul(b, vlog1mexp(a));
    terms = sub(terms, mul(sub(ones, b), a));
    return rowsum(terms);
}

Eigen::MatrixXd nb_mean_matrix(const Eigen::MatrixXd& log_r, const Eigen::MatrixXd& logits) {
    // mean = r p/(1-p) = exp(log_r + u)
    return (log_r + logits).array().exp();
}

Eigen::MatrixXd occurrence_prob_matrix(const Eigen::MatrixXd& log_r,
                                       const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd q(log_r.rows(), log_r.cols());
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        for (Eigen::Index j = 0; j < q.cols(); ++j) {
            const double a = std::exp(log_r(i, j)) * softplus(logits(i, j));
            q(i, j) = -std::expm1(-a);
        }
    }
    return q;
}

}  // namespace llost
