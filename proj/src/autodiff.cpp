#include "llost/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "llost/mathutil.hpp"

namespace llost::ad {

namespace {

std::atomic<std::uint64_t> g_counter{0};

Var fresh(Mat value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->order = g_counter.fetch_add(1, std::memory_order_relaxed);
    return n;
}

// Wires parents and backprop only when some parent needs gradients, so
// inference graphs keep no history.
Var make_op(Mat value, std::vector<Var> parents, std::function<void(Node&)> backprop) {
    Var n = fresh(std::move(value));
    bool needs = false;
    for (const auto& p : parents) needs = needs || p->requires_grad;
    if (needs) {
        n->requires_grad = true;
        n->parents = std::move(parents);
        n->backprop = std::move(backprop);
    }
    return n;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (a->rows() != b->rows() || a->cols() != b->cols()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
    }
}

}  // namespace

void Node::accumulate(const Mat& g) {
    if (!has_grad()) {
        grad = Mat::Zero(value.rows(), value.cols());
    }
    grad += g;
}

Var constant(Mat v) { return fresh(std::move(v)); }

Var param(Mat v) {
    Var n = fresh(std::move(v));
    n->requires_grad = true;
    return n;
}

void backward(const Var& loss) {
    if (loss->rows() != 1 || loss->cols() != 1) {
        throw std::invalid_argument("backward: loss must be 1x1");
    }
    if (!loss->requires_grad) return;

    // Collect the reachable grad-requiring subgraph (iterative DFS), then
    // replay in descending creation order, which is a reverse topological
    // order because parents always precede children.
    std::vector<Node*> nodes;
    std::unordered_set<Node*> seen;
    std::vector<Node*> stack{loss.get()};
    seen.insert(loss.get());
    while (!stack.empty()) {
        Node* n = stack.back();
        stack.pop_back();
        nodes.push_back(n);
        for (const auto& p : n->parents) {
            if (p->requires_grad && seen.insert(p.get()).second) {
                stack.push_back(p.get());
            }
        }
    }
    std::sort(nodes.begin(), nodes.end(),
              [](const Node* a, const Node* b) { return a->order > b->order; });

    loss->accumulate(Mat::Ones(1, 1));
    for (Node* n : nodes) {
        if (n->backprop && n->has_grad()) n->backprop(*n);
    }
}

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Node* pa = a.get();
    Node* pb = b.get();
    return make_op(a->value + b->value, {a, b}, [pa, pb](Node& self) {
        if (pa->requires_grad) pa->accumulate(self.grad);
        if (pb->requires_grad) pb->accumulate(self.grad);
    });
}

Var add_rowvec(const Var& a, const Var& b) {
    if (b->rows() != 1 || b->cols() != a->cols()) {
        throw std::invalid_argument("add_rowvec: b must be 1 x cols(a)");
    }
    Node* pa = a.get();
    Node* pb = b.get();
    return make_op(a->value.rowwise() + b->value.row(0), {a, b}, [pa, pb](Node& self) {
        if (pa->requires_grad) pa->accumulate(self.grad);
        if (pb->requires_grad) pb->accumulate(self.grad.colwise().sum());
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Node* pa = a.get();
    Node* pb = b.get();
    return make_op(a->value - b->value, {a, b}, [pa, pb](Node& self) {
        if (pa->requires_grad) pa->accumulate(self.grad);
        if (pb->requires_grad) pb->accumulate(-self.grad);
    });
}

Var neg(const Var& a) {
    Node* pa = a.get();
    return make_op(-a->value, {a}, [pa](Node& self) { pa->accumulate(-self.grad); });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    Node* pa = a.get();
    Node* pb = b.get();
    return make_op(a->value.cwiseProduct(b->value), {a, b}, [pa, pb](Node& self) {
        if (pa->requires_grad) pa->accumulate(self.grad.cwiseProduct(pb->value));
        if (pb->requires_grad) pb->accumulate(self.grad.cwiseProduct(pa->value));
    });
}

Var scale(const Var& a, double s) {
    Node* pa = a.get();
    return make_op(a->value * s, {a}, [pa, s](Node& self) { pa->accumulate(self.grad * s); });
}

Var add_scalar(const Var& a, double s) {
    Node* pa = a.get();
    return make_op(a->value.array() + s, {a}, [pa](Node& self) { pa->accumulate(self.grad); });
}

Var matmul(const Var& a, const Var& b) {
    if (a->cols() != b->rows()) throw std::invalid_argument("matmul: inner dims differ");
    Node* pa = a.get();
    Node* pb = b.get();
    return make_op(a->value * b->value, {a, b}, [pa, pb](Node& self) {
        if (pa->requires_grad) pa->accumulate(self.grad * pb->value.transpose());
        if (pb->requires_grad) pb->accumulate(pa->value.transpose() * self.grad);
    });
}

Var vtanh(const Var& a) {
    Node* pa = a.get();
    return make_op(a->value.array().tanh(), {a}, [pa](Node& self) {
        pa->accumulate((self.grad.array() * (1.0 - self.value.array().square())).matrix());
    });
}

Var vsigmoid(const Var& a) {
    Mat y = a->value.unaryExpr([](double x) { return sigmoid(x); });
    Node* pa = a.get();
    return make_op(std::move(y), {a}, [pa](Node& self) {
        pa->accumulate(
            (self.grad.array() * self.value.array() * (1.0 - self.value.array())).matrix());
    });
}

Var vexp(const Var& a) {
    Node* pa = a.get();
    return make_op(a->value.array().exp(), {a}, [pa](Node& self) {
        pa->accumulate(self.grad.cwiseProduct(self.value));
    });
}

Var vlog(const Var& a) {
    Node* pa = a.get();
    return make_op(a->value.array().log(), {a}, [pa](Node& self) {
        pa->accumulate(self.grad.cwiseQuotient(pa->value));
    });
}

Var vsquare(const Var& a) {
    Node* pa = a.get();
    return make_op(a->value.array().square(), {a}, [pa](Node& self) {
        pa->accumulate(2.0 * self.grad.cwiseProduct(pa->value));
    });
}

Var vsoftplus(const Var& a) {
    Mat y = a->value.unaryExpr([](double x) { return softplus(x); });
    Node* pa = a.get();
    return make_op(std::move(y), {a}, [pa](Node& self) {
        Mat s = pa->value.unaryExpr([](double x) { return sigmoid(x); });
        pa->accumulate(self.grad.cwiseProduct(s));
    });
}

Var vlgamma(const Var& a) {
    Node* pa = a.get();
    return make_op(a->value.unaryExpr([](double x) { return std::lgamma(x); }), {a},
                   [pa](Node& self) {
                       Mat d = pa->value.unaryExpr([](double x) { return digamma(x); });
                       pa->accumulate(self.grad.cwiseProduct(d));
                   });
}

Var vlog1mexp(const Var& a) {
    if ((a->value.array() <= 0.0).any()) {
        throw std::invalid_argument("vlog1mexp: entries must be positive");
    }
    Mat y = a->value.unaryExpr([](double x) { return log1mexp(x); });
    Node* pa = a.get();
    return make_op(std::move(y), {a}, [pa](Node& self) {
        // d/da log(1 - e^{-a}) = 1 / (e^a - 1)
        Mat d = pa->value.unaryExpr([](double x) { return 1.0 / std::expm1(x); });
        pa->accumulate(self.grad.cwiseProduct(d));
    });
}

Var clamp(const Var& a, double lo, double hi) {
    Node* pa = a.get();
    Mat y = a->value.unaryExpr([lo, hi](double x) { return std::min(std::max(x, lo), hi); });
    return make_op(std::move(y), {a}, [pa, lo, hi](Node& self) {
        Mat mask = pa->value.unaryExpr(
            [lo, hi](double x) { return (x > lo && x < hi) ? 1.0 : 0.0; });
        pa->accumulate(self.grad.cwiseProduct(mask));
    });
}

Var softclamp(const Var& a, double c) {
    return scale(vtanh(scale(a, 1.0 / c)), c);
}

Var cols(const Var& a, int j0, int n) {
    if (j0 < 0 || n < 0 || j0 + n > a->cols()) throw std::invalid_argument("cols: out of range");
    Node* pa = a.get();
    return make_op(a->value.middleCols(j0, n), {a}, [pa, j0, n](Node& self) {
        Mat g = Mat::Zero(pa->value.rows(), pa->value.cols());
        g.middleCols(j0, n) = self.grad;
        pa->accumulate(g);
    });
}

Var hcat(const Var& a, const Var& b) { return hcat(std::vector<Var>{a, b}); }

Var hcat(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("hcat: no parts");
    const int r = parts[0]->rows();
    int c = 0;
    for (const auto& p : parts) {
        if (p->rows() != r) throw std::invalid_argument("hcat: row mismatch");
        c += p->cols();
    }
    Mat y(r, c);
    std::vector<int> offsets(parts.size());
    int j = 0;
    for (size_t i = 0; i < parts.size(); ++i) {
        offsets[i] = j;
        y.middleCols(j, parts[i]->cols()) = parts[i]->value;
        j += parts[i]->cols();
    }
    std::vector<Node*> raw(parts.size());
    for (size_t i = 0; i < parts.size(); ++i) raw[i] = parts[i].get();
    return make_op(std::move(y), parts, [raw, offsets](Node& self) {
        for (size_t i = 0; i < raw.size(); ++i) {
            if (raw[i]->requires_grad) {
                raw[i]->accumulate(self.grad.middleCols(offsets[i], raw[i]->cols()));
            }
        }
    });
}

Var permute_cols(const Var& a, const std::vector<int>& perm) {
    if (static_cast<int>(perm.size()) != a->cols()) {
        throw std::invalid_argument("permute_cols: perm size mismatch");
    }
    Mat y(a->rows(), a->cols());
    for (int i = 0; i < a->cols(); ++i) y.col(i) = a->value.col(perm[i]);
    Node* pa = a.get();
    return make_op(std::move(y), {a}, [pa, perm](Node& self) {
        Mat g = Mat::Zero(pa->value.rows(), pa->value.cols());
        for (int i = 0; i < self.cols(); ++i) g.col(perm[i]) += self.grad.col(i);
        pa->accumulate(g);
    });
}

Var repeat_rows_each(const Var& a, int k) {
    if (k <= 0) throw std::invalid_argument("repeat_rows_each: k must be positive");
    const int r = a->rows();
    Mat y(r * k, a->cols());
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < k; ++j) y.row(i * k + j) = a->value.row(i);
    }
    Node* pa = a.get();
    return make_op(std::move(y), {a}, [pa, k](Node& self) {
        Mat g(pa->value.rows(), pa->value.cols());
        for (int i = 0; i < pa->rows(); ++i) {
            g.row(i) = self.grad.middleRows(i * k, k).colwise().sum();
        }
        pa->accumulate(g);
    });
}

Var rowsum(const Var& a) {
    Node* pa = a.get();
    return make_op(a->value.rowwise().sum(), {a}, [pa](Node& self) {
        pa->accumulate(self.grad * Eigen::RowVectorXd::Ones(pa->cols()));
    });
}

Var sum_all(const Var& a) {
    Node* pa = a.get();
    Mat y(1, 1);
    y(0, 0) = a->value.sum();
    return make_op(std::move(y), {a}, [pa](Node& self) {
        pa->accumulate(Mat::Constant(pa->rows(), pa->cols(), self.grad(0, 0)));
    });
}

Var mean_all(const Var& a) {
    Node* pa = a.get();
    const double inv = 1.0 / static_cast<double>(a->value.size());
    Mat y(1, 1);
    y(0, 0) = a->value.sum() * inv;
    return make_op(std::move(y), {a}, [pa, inv](Node& self) {
        pa->accumulate(Mat::Constant(pa->rows(), pa->cols(), self.grad(0, 0) * inv));
    });
}

Var segmax_rows(const Var& a, int k) {
    if (k <= 0 || a->rows() % k != 0) throw std::invalid_argument("segmax_rows: bad segment size");
    const int nseg = a->rows() / k;
    const int c = a->cols();
    Mat y(nseg, c);
    // argmax per (segment, column); ties go to the earliest row so the
    // backward routing is deterministic.
    std::vector<int> arg(static_cast<size_t>(nseg) * c);
    for (int s = 0; s < nseg; ++s) {
        for (int j = 0; j < c; ++j) {
            int best = s * k;
            double bv = a->value(best, j);
            for (int i = 1; i < k; ++i) {
                double v = a->value(s * k + i, j);
                if (v > bv) {
                    bv = v;
                    best = s * k + i;
                }
            }
            y(s, j) = bv;
            arg[static_cast<size_t>(s) * c + j] = best;
        }
    }
    Node* pa = a.get();
    return make_op(std::move(y), {a}, [pa, k, nseg, c, arg](Node& self) {
        Mat g = Mat::Zero(pa->value.rows(), pa->value.cols());
        for (int s = 0; s < nseg; ++s) {
            for (int j = 0; j < c; ++j) {
                g(arg[static_cast<size_t>(s) * c + j], j) += self.grad(s, j);
            }
        }
        pa->accumulate(g);
    });
}

Var segmean_rows(const Var& a, int k) {
    if (k <= 0 || a->rows() % k != 0) {
        throw std::invalid_argument("segmean_rows: bad segment size");
    }
    const int nseg = a->rows() / k;
    Mat y(nseg, a->cols());
    for (int s = 0; s < nseg; ++s) {
        y.row(s) = a->value.middleRows(s * k, k).colwise().mean();
    }
    Node* pa = a.get();
    const double inv = 1.0 / k;
    return make_op(std::move(y), {a}, [pa, k, nseg, inv](Node& self) {
        Mat g(pa->value.rows(), pa->value.cols());
        for (int s = 0; s < nseg; ++s) {
            g.middleRows(s * k, k).rowwise() = (self.grad.row(s) * inv).eval();
        }
        pa->accumulate(g);
    });
}

Var chamfer_sym(const Var& pred, const std::vector<Mat>& targets) {
    if (pred->cols() % 3 != 0) throw std::invalid_argument("chamfer_sym: cols must divide by 3");
    const int b = pred->rows();
    if (static_cast<int>(targets.size()) != b) {
        throw std::invalid_argument("chamfer_sym: batch size mismatch");
    }
    const int n = pred->cols() / 3;

    double total = 0.0;
    // Per cloud: nearest target for each predicted point and vice versa.
    std::vector<std::vector<int>> near_t(b), near_p(b);
    for (int i = 0; i < b; ++i) {
        const Mat& tgt = targets[i];
        const int m = static_cast<int>(tgt.rows());
        if (m == 0 || tgt.cols() != 3) throw std::invalid_argument("chamfer_sym: bad target cloud");
        near_t[i].assign(n, 0);
        near_p[i].assign(m, 0);
        std::vector<double> best_p(m, std::numeric_limits<double>::infinity());
        double acc_pt = 0.0;
        for (int p = 0; p < n; ++p) {
            const double px = pred->value(i, 3 * p);
            const double py = pred->value(i, 3 * p + 1);
            const double pz = pred->value(i, 3 * p + 2);
            double best = std::numeric_limits<double>::infinity();
            int bj = 0;
            for (int q = 0; q < m; ++q) {
                const double dx = px - tgt(q, 0);
                const double dy = py - tgt(q, 1);
                const double dz = pz - tgt(q, 2);
                const double d = dx * dx + dy * dy + dz * dz;
                if (d < best) {
                    best = d;
                    bj = q;
                }
                if (d < best_p[q]) {
                    best_p[q] = d;
                    near_p[i][q] = p;
                }
            }
            near_t[i][p] = bj;
            acc_pt += best;
        }
        double acc_tp = 0.0;
        for (int q = 0; q < m; ++q) acc_tp += best_p[q];
        total += acc_pt / n + acc_tp / m;
    }

    Mat y(1, 1);
    y(0, 0) = total / b;
    Node* pp = pred.get();
    auto tgts = targets;  // own a copy for the backward pass
    return make_op(std::move(y), {pred},
                   [pp, tgts = std::move(tgts), near_t = std::move(near_t),
                    near_p = std::move(near_p), b, n](Node& self) {
                       const double gs = self.grad(0, 0) / b;
                       Mat g = Mat::Zero(pp->value.rows(), pp->value.cols());
                       for (int i = 0; i < b; ++i) {
                           const Mat& tgt = tgts[i];
                           const int m = static_cast<int>(tgt.rows());
                           const double wp = gs / n;
                           for (int p = 0; p < n; ++p) {
                               const int q = near_t[i][p];
                               for (int d = 0; d < 3; ++d) {
                                   g(i, 3 * p + d) +=
                                       wp * 2.0 * (pp->value(i, 3 * p + d) - tgt(q, d));
                               }
                           }
                           const double wt = gs / m;
                           for (int q = 0; q < m; ++q) {
                               const int p = near_p[i][q];
                               for (int d = 0; d < 3; ++d) {
                                   g(i, 3 * p + d) +=
                                       wt * 2.0 * (pp->value(i, 3 * p + d) - tgt(q, d));
                               }
                           }
                       }
                       pp->accumulate(g);
                   });
}

double median_bandwidth(const Mat& a, const Mat& b) {
    Mat u(a.rows() + b.rows(), a.cols());
    u << a, b;
    const int n = static_cast<int>(u.rows());
    std::vector<double> d2;
    d2.reserve(static_cast<size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            d2.push_back((u.row(i) - u.row(j)).squaredNorm());
        }
    }
    if (d2.empty()) return 1.0;
    const size_t mid = d2.size() / 2;
    std::nth_element(d2.begin(), d2.begin() + mid, d2.end());
    double med = d2[mid];
    if (d2.size() % 2 == 0) {
        double lo = *std::max_element(d2.begin(), d2.begin() + mid);
        med = 0.5 * (med + lo);
    }
    return med > 0.0 ? std::sqrt(med) : 1.0;
}

namespace {

// Accumulates the IMQ V-statistic term mean_{ij} k(x_i, y_j) and, in the
// backward pass, its gradient with respect to both row sets.
double imq_term(const Mat& x, const Mat& y, double h2) {
    double acc = 0.0;
    for (int i = 0; i < x.rows(); ++i) {
        for (int j = 0; j < y.rows(); ++j) {
            acc += 1.0 / (1.0 + (x.row(i) - y.row(j)).squaredNorm() / h2);
        }
    }
    return acc / (x.rows() * y.rows());
}

void imq_term_grad(const Mat& x, const Mat& y, double h2, double w, Mat& gx, Mat& gy) {
    const double inv = w / (x.rows() * y.rows());
    for (int i = 0; i < x.rows(); ++i) {
        for (int j = 0; j < y.rows(); ++j) {
            const Eigen::RowVectorXd diff = x.row(i) - y.row(j);
            const double k = 1.0 / (1.0 + diff.squaredNorm() / h2);
            // dk/dx_i = -(2/h2) k^2 (x_i - y_j)
            const Eigen::RowVectorXd g = (-2.0 / h2) * k * k * diff * inv;
            gx.row(i) += g;
            gy.row(j) -= g;
        }
    }
}

}  // namespace

Var mmd_iq(const Var& a, const Var& b, double h) {
    if (a->cols() != b->cols()) throw std::invalid_argument("mmd_iq: dim mismatch");
    if (!(h > 0.0)) throw std::invalid_argument("mmd_iq: bandwidth must be positive");
    const double h2 = h * h;
    const double raw = imq_term(a->value, a->value, h2) + imq_term(b->value, b->value, h2) -
                       2.0 * imq_term(a->value, b->value, h2);
    Mat y(1, 1);
    y(0, 0) = std::max(raw, 0.0);  // guards rounding; the V-statistic itself is >= 0
    Node* pa = a.get();
    Node* pb = b.get();
    return make_op(std::move(y), {a, b}, [pa, pb, h2](Node& self) {
        const double w = self.grad(0, 0);
        Mat ga = Mat::Zero(pa->rows(), pa->cols());
        Mat gb = Mat::Zero(pb->rows(), pb->cols());
        imq_term_grad(pa->value, pa->value, h2, w, ga, ga);
        imq_term_grad(pb->value, pb->value, h2, w, gb, gb);
        Mat gab = Mat::Zero(pa->rows(), pa->cols());
        Mat gba = Mat::Zero(pb->rows(), pb->cols());
        imq_term_grad(pa->value, pb->value, h2, -2.0 * w, gab, gba);
        if (pa->requires_grad) pa->accumulate(ga + gab);
        if (pb->requires_grad) pb->accumulate(gb + gba);
    });
}

}  // namespace llost::ad
