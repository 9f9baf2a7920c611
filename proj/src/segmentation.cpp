#include "bilevel/segmentation.hpp"

#include "bilevel/hypergrad.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace bilevel::seg {

namespace {

constexpr double kFeasTol = 1e-10;

Eigen::Map<const Vec> as_vec(const Mat& m) {
  return Eigen::Map<const Vec>(m.data(), m.size());
}

Mat reshape(const Vec& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw InvalidInput("segmentation: flat vector size mismatch");
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

// Weighted difference operator stacked over labels: per label block,
// w_eff .* grad_apply.
Vec weighted_grad_stack(const Grid& g, const Vec& w_eff, Index labels, const Vec& u) {
  const Index npix = g.npix();
  Vec out(2 * npix * labels);
  for (Index k = 0; k < labels; ++k)
    out.segment(2 * npix * k, 2 * npix) =
        w_eff.cwiseProduct(grad_apply(g, u.segment(npix * k, npix)));
  return out;
}

Vec weighted_grad_adjoint_stack(const Grid& g, const Vec& w_eff, Index labels, const Vec& p) {
  const Index npix = g.npix();
  Vec out(npix * labels);
  for (Index k = 0; k < labels; ++k)
    out.segment(npix * k, npix) =
        grad_adjoint_apply(g, w_eff.cwiseProduct(p.segment(2 * npix * k, 2 * npix)));
  return out;
}

void check_simplex_rows(const Mat& u, const char* who) {
  for (Index r = 0; r < u.rows(); ++r) {
    const double sum = u.row(r).sum();
    if (std::abs(sum - 1.0) > kFeasTol || u.row(r).minCoeff() < -kFeasTol) {
      std::ostringstream msg;
      msg << who << ": row " << r << " is not simplex-feasible (sum = " << sum
          << ", min = " << u.row(r).minCoeff() << ")";
      throw InvalidInput(msg.str());
    }
  }
}

}  // namespace

// --------------------------------------------------------------- types -------

void Grid::validate() const {
  if (nx < 1 || ny < 1) {
    std::ostringstream msg;
    msg << "Grid: nx = " << nx << " and ny = " << ny << " must both be at least 1";
    throw InvalidInput(msg.str());
  }
}

void CostTensor::validate() const {
  grid.validate();
  if (values.rows() != grid.npix()) {
    std::ostringstream msg;
    msg << "CostTensor: " << values.rows() << " rows for " << grid.npix() << " pixels";
    throw InvalidInput(msg.str());
  }
  if (values.cols() < 1) throw InvalidInput("CostTensor: needs at least one label");
  if (!values.allFinite()) throw InvalidInput("CostTensor: non-finite entry");
}

void ContrastWeights::validate() const {
  grid.validate();
  if (w.size() != 2 * grid.npix()) {
    std::ostringstream msg;
    msg << "ContrastWeights: " << w.size() << " entries for " << 2 * grid.npix()
        << " dual coordinates";
    throw InvalidInput(msg.str());
  }
  if (!w.allFinite() || (w.array() <= 0.0).any() || (w.array() > 1.0).any())
    throw InvalidInput("ContrastWeights: entries must lie in (0, 1]");
}

Vec LinearUnaryModel::flatten() const {
  Vec out(param_dim());
  out.head(weights.size()) = as_vec(weights);
  out.segment(weights.size(), bias.size()) = bias;
  out[out.size() - 1] = log_smoothness;
  return out;
}

LinearUnaryModel LinearUnaryModel::unflatten(const Vec& theta, Index channels, Index labels) {
  if (channels < 1 || labels < 1)
    throw InvalidInput("LinearUnaryModel: channels and labels must be at least 1");
  if (theta.size() != channels * labels + labels + 1) {
    std::ostringstream msg;
    msg << "LinearUnaryModel: parameter vector of size " << theta.size() << " cannot hold "
        << channels << "x" << labels << " weights plus biases and log-smoothness";
    throw InvalidInput(msg.str());
  }
  LinearUnaryModel m;
  m.weights = Eigen::Map<const Mat>(theta.data(), channels, labels);
  m.bias = theta.segment(channels * labels, labels);
  m.log_smoothness = theta[theta.size() - 1];
  return m;
}

void SegInstance::validate(Index labels) const {
  grid.validate();
  if (features.rows() != grid.npix())
    throw InvalidInput("SegInstance: feature rows must match the pixel count");
  if (!features.allFinite()) throw InvalidInput("SegInstance: non-finite feature");
  if (gt.size() != grid.npix())
    throw InvalidInput("SegInstance: ground-truth size must match the pixel count");
  for (Index q = 0; q < gt.size(); ++q)
    if (gt[q] < 1 || gt[q] > labels) {
      std::ostringstream msg;
      msg << "SegInstance: ground-truth label " << gt[q] << " at pixel " << q
          << " outside 1.." << labels;
      throw InvalidInput(msg.str());
    }
  contrast.validate();
  if (contrast.grid.nx != grid.nx || contrast.grid.ny != grid.ny)
    throw InvalidInput("SegInstance: contrast-weight grid mismatch");
}

// ------------------------------------------------------ grid operator --------

Vec grad_apply(const Grid& g, const Vec& field) {
  g.validate();
  if (field.size() != g.npix())
    throw InvalidInput("grad_apply: field size must equal the pixel count");
  const Index npix = g.npix();
  Vec out = Vec::Zero(2 * npix);
  for (Index j = 0; j < g.ny; ++j)
    for (Index i = 0; i < g.nx; ++i) {
      const Index q = g.pixel(i, j);
      if (i + 1 < g.nx) out[q] = field[q + 1] - field[q];
      if (j + 1 < g.ny) out[npix + q] = field[q + g.nx] - field[q];
    }
  return out;
}

Vec grad_adjoint_apply(const Grid& g, const Vec& dual) {
  g.validate();
  if (dual.size() != 2 * g.npix())
    throw InvalidInput("grad_adjoint_apply: dual size must equal twice the pixel count");
  const Index npix = g.npix();
  Vec out = Vec::Zero(npix);
  for (Index j = 0; j < g.ny; ++j)
    for (Index i = 0; i < g.nx; ++i) {
      const Index q = g.pixel(i, j);
      if (i + 1 < g.nx) {
        out[q] -= dual[q];
        out[q + 1] += dual[q];
      }
      if (j + 1 < g.ny) {
        out[q] -= dual[npix + q];
        out[q + g.nx] += dual[npix + q];
      }
    }
  return out;
}

Vec div_apply(const Grid& g, const Vec& dual) { return -grad_adjoint_apply(g, dual); }

ContrastWeights contrast_weights(const Grid& g, const Vec& channel, double gamma) {
  if (!(gamma >= 0.0)) throw InvalidInput("contrast_weights: gamma must be nonnegative");
  // Zero operator rows have zero difference, hence weight exactly 1.
  const Vec d = grad_apply(g, channel);
  return ContrastWeights{g, (-gamma * d.array().abs()).exp().matrix()};
}

double tv_energy(const Mat& u, const ContrastWeights& W, const CostTensor& c) {
  c.validate();
  W.validate();
  if (W.grid.nx != c.grid.nx || W.grid.ny != c.grid.ny)
    throw InvalidInput("tv_energy: weight grid mismatch");
  if (u.rows() != c.grid.npix() || u.cols() != c.labels())
    throw InvalidInput("tv_energy: primal field dimensions mismatch");
  check_simplex_rows(u, "tv_energy");
  double e = c.values.cwiseProduct(u).sum();
  for (Index k = 0; k < u.cols(); ++k)
    e += W.w.cwiseProduct(grad_apply(c.grid, u.col(k))).lpNorm<1>();
  return e;
}

// ------------------------------------------------------- unary model ---------

CostTensor unary_model_apply(const LinearUnaryModel& model, const Grid& g, const Mat& features) {
  g.validate();
  if (features.rows() != g.npix())
    throw InvalidInput("unary_model_apply: feature rows must match the pixel count");
  if (features.cols() != model.channels())
    throw InvalidInput("unary_model_apply: feature channel count mismatch");
  Mat values = features * model.weights;
  values.rowwise() += model.bias.transpose();
  CostTensor c{g, std::move(values)};
  c.validate();
  return c;
}

Vec unary_model_cost_jtv(const Grid& g, const Mat& features, const Mat& cotangent) {
  g.validate();
  if (features.rows() != g.npix() || cotangent.rows() != g.npix())
    throw InvalidInput("unary_model_cost_jtv: row counts must match the pixel count");
  const Mat dW = features.transpose() * cotangent;
  Vec out(dW.size() + cotangent.cols() + 1);
  out.head(dW.size()) = as_vec(dW);
  out.segment(dW.size(), cotangent.cols()) = cotangent.colwise().sum().transpose();
  out[out.size() - 1] = 0.0;
  return out;
}

// ----------------------------------------------------------- lower -----------

SegInstance make_instance(const Grid& g, Mat features, Eigen::VectorXi gt, Index labels,
                          double gamma) {
  SegInstance inst;
  inst.grid = g;
  inst.features = std::move(features);
  inst.gt = std::move(gt);
  inst.contrast = contrast_weights(g, inst.features.rowwise().mean(), gamma);
  inst.validate(labels);
  return inst;
}

LowerProblem instance_problem(const SegInstance& inst, Index labels) {
  inst.validate(labels);
  const Grid grid = inst.grid;
  const Mat features = inst.features;
  const Vec w0 = inst.contrast.w;
  const Index C = features.cols();
  const Index K = labels;
  const Index npix = grid.npix();
  const Index param_dim = C * K + K + 1;

  LowerProblem pb;
  pb.dim = npix * K;
  pb.param_dim = param_dim;
  pb.lipschitz_f = 0.0;
  pb.g_cost = [grid, features, C, K](const Vec& theta) {
    const LinearUnaryModel m = LinearUnaryModel::unflatten(theta, C, K);
    return Vec(as_vec(unary_model_apply(m, grid, features).values));
  };
  pb.g_cost_jtv = [grid, features, npix, K](const Vec&, const Vec& v) {
    return unary_model_cost_jtv(grid, features, reshape(v, npix, K));
  };
  pb.g_cost_jvp = [grid, features, C, K](const Vec&, const Vec& dir) {
    const LinearUnaryModel dm = LinearUnaryModel::unflatten(dir, C, K);
    Mat dc = features * dm.weights;
    dc.rowwise() += dm.bias.transpose();
    return Vec(as_vec(dc));
  };

  pb.K.rows = 2 * npix * K;
  pb.K.cols = npix * K;
  pb.K.apply = [grid, w0, K](const Vec& theta, const Vec& u) {
    const double s = std::exp(theta[theta.size() - 1]);
    return Vec(s * weighted_grad_stack(grid, w0, K, u));
  };
  pb.K.apply_adjoint = [grid, w0, K](const Vec& theta, const Vec& p) {
    const double s = std::exp(theta[theta.size() - 1]);
    return Vec(s * weighted_grad_adjoint_stack(grid, w0, K, p));
  };
  pb.K.theta_jtv = [grid, w0, K, param_dim](const Vec& theta, const Vec& v, const Vec& w) {
    // Only the log-smoothness slot: d/ds <e^s W0 K v, w> = <K(theta) v, w>.
    const double s = std::exp(theta[theta.size() - 1]);
    Vec out = Vec::Zero(param_dim);
    out[param_dim - 1] = s * weighted_grad_stack(grid, w0, K, v).dot(w);
    return out;
  };
  return pb;
}

ProxSpec primal_prox(const Grid& g, Index labels) {
  return ProxSpec{BregmanGenerator::entropy_simplex_grid(g.npix(), labels),
                  SimpleFunction::zero()};
}

ProxSpec dual_prox(const Grid& g, Index labels) {
  return ProxSpec{BregmanGenerator::binary_entropy_interval(2 * g.npix() * labels),
                  SimpleFunction::zero()};
}

std::pair<double, double> segmentation_steps(const ContrastWeights& W, double smoothness_scale) {
  W.validate();
  if (!(smoothness_scale >= 0.0) || !std::isfinite(smoothness_scale))
    throw InvalidInput("segmentation_steps: smoothness scale must be finite and nonnegative");
  // |diag(w) K| <= max(w) |K| and |K| <= sqrt(8) on any grid.
  const double bound = smoothness_scale * W.w.maxCoeff() * std::sqrt(8.0);
  return pd_default_steps(0.0, bound);
}

namespace {

struct PdSetup {
  PDConfig cfg;
  Vec u0;
  Vec p0;
};

PdSetup pd_setup(const Grid& g, Index labels, const ContrastWeights& W, double scale) {
  PdSetup s;
  s.cfg.primal = primal_prox(g, labels);
  s.cfg.dual = dual_prox(g, labels);
  std::tie(s.cfg.tau, s.cfg.sigma) = segmentation_steps(W, scale);
  s.cfg.K_norm_bound = scale * W.w.maxCoeff() * std::sqrt(8.0);
  s.cfg.ergodic = true;
  s.u0 = Vec::Constant(g.npix() * labels, 1.0 / static_cast<double>(labels));
  s.p0 = Vec::Zero(2 * g.npix() * labels);
  return s;
}

}  // namespace

SolveResult solve_segmentation(const CostTensor& c, const ContrastWeights& W, int n,
                               double smoothness_scale) {
  c.validate();
  W.validate();
  if (W.grid.nx != c.grid.nx || W.grid.ny != c.grid.ny)
    throw InvalidInput("solve_segmentation: weight grid mismatch");
  const Grid g = c.grid;
  const Index K = c.labels();
  const Index npix = g.npix();

  LowerProblem pb;
  pb.dim = npix * K;
  pb.param_dim = 0;
  const Vec cost = as_vec(c.values);
  pb.g_cost = [cost](const Vec&) { return cost; };
  const Vec w_eff = smoothness_scale * W.w;
  pb.K.rows = 2 * npix * K;
  pb.K.cols = npix * K;
  pb.K.apply = [g, w_eff, K](const Vec&, const Vec& u) {
    return weighted_grad_stack(g, w_eff, K, u);
  };
  pb.K.apply_adjoint = [g, w_eff, K](const Vec&, const Vec& p) {
    return weighted_grad_adjoint_stack(g, w_eff, K, p);
  };

  PdSetup s = pd_setup(g, K, W, smoothness_scale);
  SolveResult out;
  out.trace = pd_run(pb, Vec(), s.u0, s.p0, n, s.cfg);
  out.tau = s.cfg.tau;
  out.sigma = s.cfg.sigma;
  out.state.grid = g;
  out.state.u = reshape(out.trace.output(), npix, K);
  out.state.p = reshape(out.trace.duals.back(), 2 * npix, K);
  return out;
}

SolveResult solve_instance(const SegInstance& inst, Index labels, const Vec& theta, int n_inner,
                           double tau, double sigma) {
  const Grid g = inst.grid;
  const Index npix = g.npix();
  const LowerProblem pb = instance_problem(inst, labels);
  if (theta.size() != pb.param_dim)
    throw InvalidInput("solve_instance: parameter vector size mismatch");
  const double scale = std::exp(theta[theta.size() - 1]);
  PdSetup s = pd_setup(g, labels, inst.contrast, scale);
  if (tau > 0.0 && sigma > 0.0) {
    s.cfg.tau = tau;
    s.cfg.sigma = sigma;
  }
  SolveResult out;
  out.trace = pd_run(pb, theta, s.u0, s.p0, n_inner, s.cfg);
  out.tau = s.cfg.tau;
  out.sigma = s.cfg.sigma;
  out.state.grid = g;
  out.state.u = reshape(out.trace.output(), npix, labels);
  out.state.p = reshape(out.trace.duals.back(), 2 * npix, labels);
  return out;
}

// ----------------------------------------------------------- upper -----------

SoftmaxLoss softmax_loss(const Mat& u, const Eigen::VectorXi& gt) {
  if (gt.size() != u.rows())
    throw InvalidInput("softmax_loss: ground-truth size must match the pixel count");
  const Index K = u.cols();
  SoftmaxLoss out;
  out.grad.resize(u.rows(), K);
  double total = 0.0;
  for (Index q = 0; q < u.rows(); ++q) {
    if (gt[q] < 1 || gt[q] > K) {
      std::ostringstream msg;
      msg << "softmax_loss: label " << gt[q] << " at pixel " << q << " outside 1.." << K;
      throw InvalidInput(msg.str());
    }
    const double m = u.row(q).maxCoeff();
    const Eigen::ArrayXd e = (u.row(q).transpose().array() - m).exp();
    const double z = e.sum();
    total += m + std::log(z) - u(q, gt[q] - 1);
    out.grad.row(q) = (e / z).matrix().transpose();
    out.grad(q, gt[q] - 1) -= 1.0;
  }
  out.value = total;
  return out;
}

std::vector<int> argmax_labels(const Mat& u) {
  std::vector<int> labels(static_cast<size_t>(u.rows()));
  for (Index q = 0; q < u.rows(); ++q) {
    Index best = 0;
    u.row(q).maxCoeff(&best);
    labels[static_cast<size_t>(q)] = static_cast<int>(best) + 1;
  }
  return labels;
}

double pixel_accuracy(const std::vector<int>& labels, const Eigen::VectorXi& gt) {
  if (static_cast<Index>(labels.size()) != gt.size() || gt.size() == 0)
    throw InvalidInput("pixel_accuracy: label count mismatch");
  Index hits = 0;
  for (Index q = 0; q < gt.size(); ++q)
    if (labels[static_cast<size_t>(q)] == gt[q]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(gt.size());
}

void IouAccumulator::add(const std::vector<int>& labels, const Eigen::VectorXi& gt) {
  if (static_cast<Index>(labels.size()) != gt.size())
    throw InvalidInput("IouAccumulator: label count mismatch");
  const int K = static_cast<int>(intersection.size());
  for (Index q = 0; q < gt.size(); ++q) {
    const int pred = labels[static_cast<size_t>(q)];
    const int truth = gt[q];
    if (pred < 1 || pred > K || truth < 1 || truth > K)
      throw InvalidInput("IouAccumulator: label outside 1..K");
    if (pred == truth) {
      intersection[static_cast<size_t>(truth - 1)] += 1.0;
      unions[static_cast<size_t>(truth - 1)] += 1.0;
    } else {
      unions[static_cast<size_t>(truth - 1)] += 1.0;
      unions[static_cast<size_t>(pred - 1)] += 1.0;
    }
  }
}

double IouAccumulator::mean() const {
  double sum = 0.0;
  int seen = 0;
  for (size_t k = 0; k < unions.size(); ++k) {
    if (unions[k] <= 0.0) continue;
    sum += intersection[k] / unions[k];
    ++seen;
  }
  return seen > 0 ? sum / seen : kNaN;
}

double mean_iou(const std::vector<int>& labels, const Eigen::VectorXi& gt, Index K) {
  IouAccumulator acc(K);
  acc.add(labels, gt);
  return acc.mean();
}

SolveResult infer(const SegInstance& inst, const LinearUnaryModel& model, int n_inner) {
  inst.validate(model.labels());
  const CostTensor c = unary_model_apply(model, inst.grid, inst.features);
  return solve_segmentation(c, inst.contrast, n_inner, std::exp(model.log_smoothness));
}

BatchEval evaluate_batch(const std::vector<SegInstance>& dataset, const LinearUnaryModel& model,
                         int n_inner) {
  if (dataset.empty()) throw InvalidInput("evaluate_batch: empty dataset");
  if (n_inner < 1) throw ConfigError("evaluate_batch: n_inner must be at least 1");
  const Index K = model.labels();
  const Vec theta = model.flatten();

  BatchEval ev;
  ev.gradient = Vec::Zero(model.param_dim());
  Index hits = 0;
  Index total = 0;
  IouAccumulator iou(K);
  for (const SegInstance& inst : dataset) {
    const LowerProblem pb = instance_problem(inst, K);
    const SolveResult sol = solve_instance(inst, K, theta, n_inner);
    const Mat& u = sol.state.u;
    const SoftmaxLoss sl = softmax_loss(u, inst.gt);

    LossGrads lg;
    lg.wrt_x = as_vec(sl.grad);
    lg.wrt_theta = Vec::Zero(model.param_dim());
    const GradientReport rep =
        reverse_pd(sol.trace, pb, primal_prox(inst.grid, K), dual_prox(inst.grid, K), lg);
    ev.loss += sl.value;
    ev.gradient += rep.gradient;

    const std::vector<int> labels = argmax_labels(u);
    for (Index q = 0; q < inst.gt.size(); ++q)
      if (labels[static_cast<size_t>(q)] == inst.gt[q]) ++hits;
    total += inst.gt.size();
    iou.add(labels, inst.gt);
  }
  ev.pixel_acc = static_cast<double>(hits) / static_cast<double>(total);
  ev.mean_iou = iou.mean();
  return ev;
}

TrainResult train(const std::vector<SegInstance>& dataset, const LinearUnaryModel& init,
                  const TrainConfig& cfg) {
  if (dataset.empty()) throw InvalidInput("train: empty dataset");
  const Index C = init.channels();
  const Index K = init.labels();
  for (const SegInstance& inst : dataset) inst.validate(K);

  std::vector<std::pair<double, double>> metrics;  // (pixel_acc, mean_iou) per evaluation
  auto evaluate = [&](const Vec& th) {
    const LinearUnaryModel m = LinearUnaryModel::unflatten(th, C, K);
    BatchEval ev = evaluate_batch(dataset, m, cfg.n_inner);
    metrics.emplace_back(ev.pixel_acc, ev.mean_iou);
    return std::make_pair(ev.loss, std::move(ev.gradient));
  };
  const OuterResult res = run_outer(evaluate, init.flatten(), cfg.outer);

  TrainResult out;
  out.model = LinearUnaryModel::unflatten(res.theta, C, K);
  out.rows.reserve(res.rows.size());
  for (size_t r = 0; r < res.rows.size(); ++r)
    out.rows.push_back({res.rows[r].iter, res.rows[r].loss, metrics[r].first, metrics[r].second,
                        res.rows[r].seconds});
  return out;
}

// ------------------------------------------------------ synthetic data -------

std::vector<SegInstance> synthetic_dataset(Index nx, Index ny, int images, double feature_scale,
                                           double gamma) {
  Grid g{nx, ny};
  g.validate();
  if (images < 1) throw InvalidInput("synthetic_dataset: needs at least one image");
  if (!(feature_scale > 0.0)) throw InvalidInput("synthetic_dataset: feature scale must be positive");
  const Index npix = g.npix();
  const double scales[3] = {0.8 * feature_scale, 1.0 * feature_scale, 1.2 * feature_scale};

  std::vector<SegInstance> out;
  out.reserve(static_cast<size_t>(images));
  for (int m = 0; m < images; ++m) {
    Eigen::VectorXi gt(npix);
    for (Index j = 0; j < ny; ++j)
      for (Index i = 0; i < nx; ++i) {
        int label = 1;
        switch (m % 4) {
          case 0: label = 1 + static_cast<int>(std::min<Index>(2, 3 * i / nx)); break;
          case 1: label = 1 + static_cast<int>(std::min<Index>(2, 3 * j / ny)); break;
          case 2:
            label = 1 + static_cast<int>(std::min<Index>(2, 3 * (i + j) / (nx + ny - 1)));
            break;
          case 3: {
            const double r = std::max(std::abs(i - 0.5 * (nx - 1)), std::abs(j - 0.5 * (ny - 1)));
            const double rmax = 0.5 * std::max(nx - 1, ny - 1);
            label = r < rmax / 3.0 ? 1 : (r < 2.0 * rmax / 3.0 ? 2 : 3);
            break;
          }
        }
        gt[g.pixel(i, j)] = label;
      }
    Mat features = Mat::Zero(npix, 3);
    for (Index q = 0; q < npix; ++q) features(q, gt[q] - 1) = scales[gt[q] - 1];
    out.push_back(make_instance(g, std::move(features), std::move(gt), 3, gamma));
  }
  return out;
}

LinearUnaryModel synthetic_init(Index channels, Index labels) {
  if (channels < 1 || labels < 1)
    throw InvalidInput("synthetic_init: channels and labels must be at least 1");
  LinearUnaryModel m;
  m.weights = Mat::Zero(channels, labels);
  m.bias = Vec::Zero(labels);
  if (labels > 1)
    for (Index k = 0; k < labels; ++k)
      m.bias[k] = 0.5 - static_cast<double>(k) / static_cast<double>(labels - 1);
  m.log_smoothness = 0.0;
  return m;
}

SegInstance checker_instance(Index nx, Index ny, Index labels) {
  Grid g{nx, ny};
  g.validate();
  if (labels < 2) throw InvalidInput("checker_instance: needs at least two labels");
  const Index npix = g.npix();
  Mat features(npix, 2);
  Eigen::VectorXi gt(npix);
  for (Index j = 0; j < ny; ++j)
    for (Index i = 0; i < nx; ++i) {
      const Index q = g.pixel(i, j);
      features(q, 0) = 0.3 * static_cast<double>(i) - 0.2 * static_cast<double>(j) + 0.1;
      features(q, 1) = std::sin(0.7 * static_cast<double>(i) + 0.3 * static_cast<double>(j));
      gt[q] = 1 + static_cast<int>(std::min<Index>(labels - 1, labels * i / nx));
    }
  return make_instance(g, std::move(features), std::move(gt), labels, 10.0);
}

LinearUnaryModel checker_model(Index labels) {
  if (labels < 2) throw InvalidInput("checker_model: needs at least two labels");
  LinearUnaryModel m;
  m.weights = Mat(2, labels);
  m.bias = Vec(labels);
  for (Index k = 0; k < labels; ++k) {
    m.weights(0, k) = 0.4 - 0.7 * static_cast<double>(k) / static_cast<double>(labels - 1);
    m.weights(1, k) = 0.2 + 0.3 * static_cast<double>(k) / static_cast<double>(labels - 1);
    m.bias[k] = 0.1 - 0.3 * static_cast<double>(k) / static_cast<double>(labels - 1);
  }
  m.log_smoothness = -0.3;
  return m;
}

}  // namespace bilevel::seg
