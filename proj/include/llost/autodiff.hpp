#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace llost::ad {

using Mat = Eigen::MatrixXd;

// One value in a define-by-run graph. Nodes are created by the free functions
// below; parents are retained only while some parent requires gradients, so
// pure-inference graphs collapse to bare values.
struct Node {
    Mat value;
    Mat grad;  // empty until the first accumulation
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;  // pulls this->grad into parents
    std::uint64_t order = 0;              // creation counter, gives topo order
    bool requires_grad = false;

    void accumulate(const Mat& g);
    bool has_grad() const { return grad.size() != 0; }
    int rows() const { return static_cast<int>(value.rows()); }
    int cols() const { return static_cast<int>(value.cols()); }
    double scalar() const { return value(0, 0); }
};

using Var = std::shared_ptr<Node>;

Var constant(Mat v);
Var param(Mat v);  // leaf that accumulates gradients

// Reverse sweep from a 1x1 loss node. Grads of reachable nodes accumulate;
// callers zero parameter grads between steps.
void backward(const Var& loss);

// Elementwise and broadcast arithmetic.
Var add(const Var& a, const Var& b);         // same shape
Var add_rowvec(const Var& a, const Var& b);  // b is 1 x C, broadcast down rows
Var sub(const Var& a, const Var& b);
Var neg(const Var& a);
Var mul(const Var& a, const Var& b);  // elementwise
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);

Var matmul(const Var& a, const Var& b);

// Elementwise nonlinearities.
Var vtanh(const Var& a);
Var vsigmoid(const Var& a);
Var vexp(const Var& a);
Var vlog(const Var& a);
Var vsquare(const Var& a);
Var vsoftplus(const Var& a);
Var vlgamma(const Var& a);
// log(1 - e^{-a}) for strictly positive entries of a.
Var vlog1mexp(const Var& a);
// Hard clamp; gradient passes only where the value was strictly inside.
Var clamp(const Var& a, double lo, double hi);
// c * tanh(x / c): smooth squashing to (-c, c), identity-like near zero.
Var softclamp(const Var& a, double c);

// Shape ops.
Var cols(const Var& a, int j0, int n);
Var hcat(const Var& a, const Var& b);
Var hcat(const std::vector<Var>& parts);
Var permute_cols(const Var& a, const std::vector<int>& perm);  // out.col(i) = in.col(perm[i])
Var repeat_rows_each(const Var& a, int k);  // each row duplicated k consecutive times

// Reductions.
Var rowsum(const Var& a);   // R x C -> R x 1
Var sum_all(const Var& a);  // -> 1 x 1
Var mean_all(const Var& a);
// Segmented reductions over blocks of k consecutive rows; R must divide by k.
Var segmax_rows(const Var& a, int k);  // ties resolve to the earliest row
Var segmean_rows(const Var& a, int k);

// Symmetric Chamfer distance, averaged over the batch. pred row b holds a
// cloud flattened as [x0 y0 z0 x1 y1 z1 ...]; targets[b] is N_b x 3.
Var chamfer_sym(const Var& pred, const std::vector<Mat>& targets);

// Squared MMD between row sets, biased V-statistic with the
// inverse-multiquadratic kernel k(x,y) = 1 / (1 + |x-y|^2 / h^2).
Var mmd_iq(const Var& a, const Var& b, double h);
// Median pairwise squared distance over the union of rows, as sqrt; the
// usual bandwidth heuristic, computed outside the graph.
double median_bandwidth(const Mat& a, const Mat& b);

}  // namespace llost::ad
