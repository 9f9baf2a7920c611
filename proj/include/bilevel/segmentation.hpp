#pragma once

// Multi-label TV segmentation as a bilevel instance.
//
// Lower level (per image):  min_u <c(theta), u> + |W(theta) K u|_1  over the
// pixel-wise unit simplex, solved by the ergodic Bregman primal-dual scheme
// with the entropy prox on the primal and the binary-entropy prox on the
// pixel-wise l-infinity dual ball.  Upper level: softmax loss against a
// ground-truth labeling; the cost tensor is an affine function of per-pixel
// features (weights, biases, and a log-smoothness scalar scaling W).
//
// Layout.  Pixels (i, j), 0 <= i < nx, 0 <= j < ny, are linearized as
// i + j*nx.  A primal field is a npix x K matrix (one column per label);
// its solver vector is the column-major flattening, so label blocks are
// contiguous.  A dual field is a 2*npix x K matrix, each column stacking the
// x-difference block over the y-difference block for one label.

#include "bilevel/bregman.hpp"
#include "bilevel/problem.hpp"
#include "bilevel/solvers.hpp"
#include "bilevel/trace.hpp"
#include "bilevel/types.hpp"
#include "bilevel/upper.hpp"

#include <string>
#include <vector>

namespace bilevel::seg {

struct Grid {
  Index nx = 0;
  Index ny = 0;

  Index npix() const { return nx * ny; }
  Index pixel(Index i, Index j) const { return i + j * nx; }
  void validate() const;  // InvalidInput unless nx, ny >= 1
};

// Per-pixel, per-label linear cost.
struct CostTensor {
  Grid grid;
  Mat values;  // npix x K

  Index labels() const { return values.cols(); }
  void validate() const;  // finite entries, row count = npix
};

// Per-edge diagonal weights of the TV term, one entry per dual coordinate
// (rows i = nx-1 and j = ny-1 carry weight 1 over the zero operator rows).
struct ContrastWeights {
  Grid grid;
  Vec w;  // 2*npix, entries in (0, 1]

  void validate() const;
};

struct SegmentationState {
  Grid grid;
  Mat u;  // npix x K, rows on the unit simplex
  Mat p;  // 2*npix x K, entries in [-1, 1]
};

// Affine cost model c^k = features * weights_k + bias_k; log_smoothness
// scales the contrast weights by exp(log_smoothness).
struct LinearUnaryModel {
  Mat weights;  // channels x labels
  Vec bias;     // labels
  double log_smoothness = 0.0;

  Index channels() const { return weights.rows(); }
  Index labels() const { return weights.cols(); }
  Index param_dim() const { return weights.size() + bias.size() + 1; }

  Vec flatten() const;  // [vec(weights); bias; log_smoothness]
  static LinearUnaryModel unflatten(const Vec& theta, Index channels, Index labels);
};

// One labeled image: per-pixel feature rows, ground-truth labels in 1..K,
// and the contrast weights derived from the mean feature channel.
struct SegInstance {
  Grid grid;
  Mat features;          // npix x channels
  Eigen::VectorXi gt;    // npix, values 1..K
  ContrastWeights contrast;

  void validate(Index labels) const;
};

// ------------------------------------------------------ grid operator --------

// Forward differences with zero rows on the far boundary: output stacks the
// x-difference block over the y-difference block.
Vec grad_apply(const Grid& g, const Vec& field);
// Adjoint of grad_apply; div_apply is its negative.
Vec grad_adjoint_apply(const Grid& g, const Vec& dual);
Vec div_apply(const Grid& g, const Vec& dual);

// W_edge = exp(-gamma |forward difference of channel|).
ContrastWeights contrast_weights(const Grid& g, const Vec& channel, double gamma = 10.0);

// <c, u> + sum_k |W (K u^k)|_1; u must be row-wise simplex-feasible within
// 1e-10 (InvalidInput otherwise).
double tv_energy(const Mat& u, const ContrastWeights& W, const CostTensor& c);

// ------------------------------------------------------- unary model ---------

CostTensor unary_model_apply(const LinearUnaryModel& model, const Grid& g, const Mat& features);
// (d vec(c) / d theta)^T applied to a npix x K cotangent; the log-smoothness
// slot is zero (the cost tensor does not depend on it).
Vec unary_model_cost_jtv(const Grid& g, const Mat& features, const Mat& cotangent);

// ----------------------------------------------------------- lower -----------

SegInstance make_instance(const Grid& g, Mat features, Eigen::VectorXi gt, Index labels,
                          double gamma = 10.0);

// Lower problem over theta = model.flatten(): g_cost is the cost tensor, K is
// the weighted difference operator scaled by exp(log_smoothness).
LowerProblem instance_problem(const SegInstance& inst, Index labels);

ProxSpec primal_prox(const Grid& g, Index labels);
ProxSpec dual_prox(const Grid& g, Index labels);

// Step pair frozen for one solve: tau = sigma = 0.99 / bound with
// bound = smoothness_scale * max(W) * sqrt(8) (1.0 when the bound vanishes).
std::pair<double, double> segmentation_steps(const ContrastWeights& W, double smoothness_scale);

struct SolveResult {
  SegmentationState state;  // u: ergodic primal average, p: final dual
  IterateTrace trace;
  double tau = 0.0;
  double sigma = 0.0;
};

// n ergodic primal-dual updates from the uniform primal and zero dual.
// smoothness_scale multiplies the contrast weights; 0 switches the TV term
// off.  Step sizes derived via segmentation_steps.
SolveResult solve_segmentation(const CostTensor& c, const ContrastWeights& W, int n,
                               double smoothness_scale = 1.0);

// One instance solve at a parameter vector.  tau, sigma <= 0 derive the pair
// from the parameters' log-smoothness; passing them explicitly freezes the
// steps, which is what the reverse-mode gradient differentiates (the steps
// are run constants, so finite-difference probes of the composite must hold
// them fixed).
SolveResult solve_instance(const SegInstance& inst, Index labels, const Vec& theta, int n_inner,
                           double tau = 0.0, double sigma = 0.0);

// ----------------------------------------------------------- upper -----------

struct SoftmaxLoss {
  double value = 0.0;
  Mat grad;  // npix x K
};

// Sum over pixels of log sum_k exp(u_k) - u_gt; gradient softmax(u) - onehot.
SoftmaxLoss softmax_loss(const Mat& u, const Eigen::VectorXi& gt);

std::vector<int> argmax_labels(const Mat& u);  // 1..K per pixel
double pixel_accuracy(const std::vector<int>& labels, const Eigen::VectorXi& gt);
// Mean over labels of |pred ∩ gt| / |pred ∪ gt|, skipping labels absent from
// both; counts may be accumulated across images before the mean.
struct IouAccumulator {
  std::vector<double> intersection;
  std::vector<double> unions;

  explicit IouAccumulator(Index labels)
      : intersection(static_cast<size_t>(labels), 0.0),
        unions(static_cast<size_t>(labels), 0.0) {}
  void add(const std::vector<int>& labels, const Eigen::VectorXi& gt);
  double mean() const;
};
double mean_iou(const std::vector<int>& labels, const Eigen::VectorXi& gt, Index K);

// Ergodic solve of one instance under a model.
SolveResult infer(const SegInstance& inst, const LinearUnaryModel& model, int n_inner);

struct TrainConfig {
  OuterConfig outer;  // method, iterations, rate, ...
  int n_inner = 100;
};

struct TrainRow {
  int iter = 0;
  double loss = kNaN;
  double pixel_acc = kNaN;
  double mean_iou = kNaN;
  double seconds = 0.0;
};

struct TrainResult {
  LinearUnaryModel model;
  std::vector<TrainRow> rows;
};

// Full-batch outer loop: per iteration, for every instance solve n_inner
// primal-dual steps, evaluate the softmax loss at the ergodic output, and
// accumulate the reverse-mode parameter gradient; then one optimizer step.
// Metrics are evaluated at the same ergodic outputs.  Zero iterations return
// the initial model with an empty log.
TrainResult train(const std::vector<SegInstance>& dataset, const LinearUnaryModel& init,
                  const TrainConfig& cfg);

// Loss/gradient/metrics of the current parameters over a dataset (one
// full-batch evaluation, no optimizer step).
struct BatchEval {
  double loss = 0.0;
  Vec gradient;
  double pixel_acc = kNaN;
  double mean_iou = kNaN;
};
BatchEval evaluate_batch(const std::vector<SegInstance>& dataset, const LinearUnaryModel& model,
                         int n_inner);

// ------------------------------------------------------ synthetic data -------

// Deterministic separable dataset: `images` instances on an nx x ny grid with
// 3 labels in banded partitions (vertical, horizontal, diagonal, rings) and 3
// feature channels, channel k = scale_k * [gt == k+1] with per-label scales
// (0.8, 1.0, 1.2) * feature_scale.
std::vector<SegInstance> synthetic_dataset(Index nx, Index ny, int images,
                                           double feature_scale = 10.0, double gamma = 10.0);

// Zero weights, staggered biases from +0.5 down to -0.5, zero log-smoothness
// (a symmetric start cannot shed half its loss: the asymmetry leaves room).
LinearUnaryModel synthetic_init(Index channels, Index labels);

// Deterministic dense fixture for gradient checking: two feature channels (a
// linear ramp and a sinusoid), vertical-band ground truth, and a generic
// model with nonzero weights, biases, and log-smoothness so every parameter
// slot influences the loss.
SegInstance checker_instance(Index nx, Index ny, Index labels);
LinearUnaryModel checker_model(Index labels);  // channels = 2

}  // namespace bilevel::seg
