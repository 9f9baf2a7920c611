#include "bilevel/cli.hpp"

#include "bilevel/config.hpp"
#include "bilevel/hypergrad.hpp"
#include "bilevel/io.hpp"
#include "bilevel/segmentation.hpp"
#include "bilevel/toy.hpp"
#include "bilevel/types.hpp"
#include "bilevel/upper.hpp"

#include <CLI11.hpp>

#include <array>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

namespace bilevel::cli {
namespace {

namespace fs = std::filesystem;

using io::CsvFile;

// ------------------------------------------------------ configuration --------

// One resolvable setting: its flag, plus string accessors so a --config file
// can fill it when the flag was absent and the manifest can echo the final
// value.
struct Binding {
  std::string key;
  CLI::Option* opt = nullptr;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

struct Command {
  CLI::App* app = nullptr;
  std::string config_path;
  std::string out_dir = "out";
  std::vector<Binding> binds;

  explicit Command(CLI::App* a) : app(a) {
    app->add_option("--config", config_path,
                    "flat key = value file; explicit flags override file values");
    bind_string("out", out_dir, "output directory");
  }

  void bind_string(const std::string& key, std::string& ref, const std::string& desc) {
    Binding b;
    b.key = key;
    b.opt = app->add_option("--" + key, ref, desc);
    b.set = [&ref](const std::string& v) { ref = v; };
    b.get = [&ref] { return ref; };
    binds.push_back(std::move(b));
  }

  void bind_double(const std::string& key, double& ref, const std::string& desc) {
    Binding b;
    b.key = key;
    b.opt = app->add_option("--" + key, ref, desc);
    b.set = [&ref, key](const std::string& v) { ref = io::parse_double(v, key); };
    b.get = [&ref] { return CsvFile::num(ref); };
    binds.push_back(std::move(b));
  }

  void bind_int(const std::string& key, int& ref, const std::string& desc) {
    Binding b;
    b.key = key;
    b.opt = app->add_option("--" + key, ref, desc);
    b.set = [&ref, key](const std::string& v) { ref = io::parse_int(v, key); };
    b.get = [&ref] { return CsvFile::num(ref); };
    binds.push_back(std::move(b));
  }

  // File values fill only settings whose flag was not given; unknown keys are
  // usage errors pointing at the offending line.
  void apply_config() {
    if (config_path.empty()) return;
    const io::Config file = io::Config::parse_file(config_path);
    for (const auto& e : file.entries()) {
      Binding* hit = nullptr;
      for (auto& b : binds)
        if (b.key == e.key) hit = &b;
      if (hit == nullptr)
        throw ConfigError(config_path + ":" + std::to_string(e.line) + ": unknown key '" + e.key +
                          "'");
      if (hit->opt->count() == 0) hit->set(e.value);
    }
  }

  io::Config resolved() const {
    io::Config cfg;
    cfg.set("command", app->get_name());
    for (const auto& b : binds) cfg.set(b.key, b.get());
    return cfg;
  }
};

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// The manifest is the one output carrying a timestamp; everything else is
// byte-deterministic for a given configuration.
void write_manifest(const fs::path& dir, const io::Config& resolved,
                    const std::vector<std::string>& notes) {
  const fs::path path = dir / "manifest.txt";
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << "# run manifest (written " << utc_timestamp() << ")\n";
  out << "# config_hash = " << resolved.hash_hex() << "\n";
  out << resolved.render();
  for (const auto& n : notes) out << "# note: " << n << "\n";
}

// ------------------------------------------------------------ parsing --------

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (const char ch : text) {
    if (ch == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  return parts;
}

std::vector<toy::EstimatorKind> parse_kinds(const std::string& text) {
  if (trim(text) == "all") return toy::kAllEstimators;
  std::vector<toy::EstimatorKind> kinds;
  for (const auto& tag : split(text, ',')) kinds.push_back(toy::estimator_from_name(trim(tag)));
  return kinds;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& what) {
  std::vector<double> vals;
  for (const auto& item : split(text, ',')) vals.push_back(io::parse_double(trim(item), what));
  return vals;
}

std::vector<int> parse_ints(const std::string& text, const std::string& what) {
  std::vector<int> vals;
  for (const auto& item : split(text, ',')) vals.push_back(io::parse_int(trim(item), what));
  return vals;
}

int env_threads() {
  const char* v = std::getenv("BILEVEL_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  const int n = io::parse_int(v, "BILEVEL_THREADS");
  return n < 0 ? 0 : n;
}

OuterMethod parse_method(const std::string& name) {
  if (name == "gd") return OuterMethod::GradientDescent;
  if (name == "ipiano") return OuterMethod::IPiano;
  if (name == "adam") return OuterMethod::Adam;
  throw InvalidInput("unknown outer method '" + name + "' (expected gd, ipiano, or adam)");
}

// ---------------------------------------------------------------- toy --------

// Settings shared by every study-problem command.
struct ToyCommon {
  double lambda = 1.0;
  double b = 1.0;
  double theta_star = 1.0;
  double alpha = 0.5;
  double mu = 1e-6;
  double x0 = 1.0;
  double solve_tol = 1e-10;
  int solve_iters = 5000;

  void bind(Command& c) {
    c.bind_double("lambda", lambda, "data-term weight of the lower problem");
    c.bind_double("b", b, "data value of the lower problem");
    c.bind_double("theta-star", theta_star, "parameter generating the target");
    c.bind_double("alpha", alpha, "mirror step of the entropy kinds");
    c.bind_double("mu", mu, "barrier parameter of the smoothed kind");
    c.bind_double("x0", x0, "starting point (positive)");
    c.bind_double("solve-tol", solve_tol, "adjoint-solve tolerance");
    c.bind_int("solve-iters", solve_iters, "adjoint-solve iteration cap");
  }

  toy::ToyConfig base() const {
    toy::ToyConfig cfg;
    cfg.lambda = lambda;
    cfg.b = b;
    cfg.theta_star = theta_star;
    cfg.alpha = alpha;
    cfg.mu = mu;
    cfg.x0 = x0;
    cfg.solve_tol = solve_tol;
    cfg.solve_iters = solve_iters;
    return cfg;
  }
};

const std::vector<std::string> kSweepColumns = {
    "kind",         "theta",        "n_forward", "n_back",     "estimate",
    "reference_lo", "reference_hi", "abs_error", "in_interval"};

struct ToyGradientsCmd {
  Command cmd;
  ToyCommon common;
  double theta = 0.3;
  int n = 200;
  int n_back = -1;
  std::string kinds = "all";

  explicit ToyGradientsCmd(CLI::App* app) : cmd(app) {
    common.bind(cmd);
    cmd.bind_double("theta", theta, "evaluation point");
    cmd.bind_int("n", n, "forward iterations");
    cmd.bind_int("n-back", n_back, "backward steps (-1: all recorded)");
    cmd.bind_string("kinds", kinds, "comma list of estimator tags, or 'all'");
  }

  int run() {
    cmd.apply_config();
    const std::vector<toy::EstimatorKind> selected = parse_kinds(kinds);
    toy::ToyConfig cfg = common.base();
    cfg.theta_eval = theta;
    cfg.n_forward = n;
    cfg.n_back = n_back;
    cfg.validate();

    const io::Config rc = cmd.resolved();
    const fs::path out(cmd.out_dir);
    fs::create_directories(out);
    write_manifest(out, rc, {});
    const std::string hash = rc.hash_hex();

    CsvFile grad((out / "gradients.csv").string(), hash, kSweepColumns);
    CsvFile contrib((out / "contributions.csv").string(), hash,
                    {"kind", "theta", "n_forward", "n_back", "back_index", "contribution"});
    const Interval ref = toy::analytic_gradient(theta, cfg);
    for (const toy::EstimatorKind kind : selected) {
      const GradientReport rep = toy::run_estimator(kind, cfg);
      const double est = rep.gradient(0);
      const std::string tag = toy::estimator_name(kind);
      grad.row({tag, CsvFile::num(theta), CsvFile::num(rep.n_forward), CsvFile::num(rep.n_back),
                CsvFile::num(est), CsvFile::num(ref.lo), CsvFile::num(ref.hi),
                CsvFile::num(ref.distance(est)), ref.contains(est) ? "1" : "0"});
      for (size_t i = 0; i < rep.contributions.size(); ++i)
        contrib.row({tag, CsvFile::num(theta), CsvFile::num(rep.n_forward),
                     CsvFile::num(rep.n_back), CsvFile::num(static_cast<int>(i)),
                     CsvFile::num(rep.contributions[i])});
      std::cout << tag << " estimate=" << CsvFile::num(est) << " reference=["
                << CsvFile::num(ref.lo) << "," << CsvFile::num(ref.hi)
                << "] error=" << CsvFile::num(ref.distance(est)) << "\n";
    }
    std::cout << "wrote " << (out / "gradients.csv").string() << "\n";
    return 0;
  }
};

struct ToySweepCmd {
  Command cmd;
  ToyCommon common;
  std::string kinds = "all";
  std::string thetas = "0,0.3,1";
  std::string n_values = "5,10,20,50,100,200";

  explicit ToySweepCmd(CLI::App* app) : cmd(app) {
    common.bind(cmd);
    cmd.bind_string("kinds", kinds, "comma list of estimator tags, or 'all'");
    cmd.bind_string("thetas", thetas, "comma list of evaluation points");
    cmd.bind_string("n", n_values, "comma list of iteration counts (n_forward = n_back)");
  }

  int run() {
    cmd.apply_config();
    const std::vector<toy::EstimatorKind> selected = parse_kinds(kinds);
    const std::vector<double> theta_list = parse_doubles(thetas, "thetas");
    const std::vector<int> n_list = parse_ints(n_values, "n");
    toy::ToyConfig base = common.base();
    base.validate();

    const io::Config rc = cmd.resolved();
    const fs::path out(cmd.out_dir);
    fs::create_directories(out);
    const std::string hash = rc.hash_hex();

    const std::vector<toy::SweepRow> rows =
        toy::sweep(base, selected, theta_list, n_list, env_threads());

    CsvFile sweep_csv((out / "sweep.csv").string(), hash, kSweepColumns);
    CsvFile contrib((out / "contributions.csv").string(), hash,
                    {"kind", "theta", "n_forward", "n_back", "back_index", "contribution"});
    CsvFile energy((out / "energies.csv").string(), hash,
                   {"kind", "theta", "n_forward", "iter", "energy"});
    std::vector<std::string> notes;
    int failed = 0;
    for (const toy::SweepRow& row : rows) {
      sweep_csv.row({row.kind, CsvFile::num(row.theta), CsvFile::num(row.n_forward),
                     CsvFile::num(row.n_back), CsvFile::num(row.estimate),
                     CsvFile::num(row.reference_lo), CsvFile::num(row.reference_hi),
                     CsvFile::num(row.abs_error), row.in_interval ? "1" : "0"});
      for (size_t i = 0; i < row.contributions.size(); ++i)
        contrib.row({row.kind, CsvFile::num(row.theta), CsvFile::num(row.n_forward),
                     CsvFile::num(row.n_back), CsvFile::num(static_cast<int>(i)),
                     CsvFile::num(row.contributions[i])});
      for (size_t i = 0; i < row.energies.size(); ++i)
        energy.row({row.kind, CsvFile::num(row.theta), CsvFile::num(row.n_forward),
                    CsvFile::num(static_cast<int>(i)), CsvFile::num(row.energies[i])});
      if (row.failed) {
        ++failed;
        notes.push_back("failed " + row.kind + " theta=" + CsvFile::num(row.theta) +
                        " n=" + CsvFile::num(row.n_forward) + ": " + row.message);
      }
    }
    write_manifest(out, rc, notes);
    std::cout << "wrote " << (out / "sweep.csv").string() << ": " << rows.size() << " rows, "
              << failed << " failed\n";
    return 0;
  }
};

// ---------------------------------------------------------- check-grad -------

struct CheckGradCmd {
  Command cmd;
  ToyCommon common;
  std::string module;
  std::string kinds = "all";
  double theta = 0.3;
  int n = 200;
  double fd_step = 1e-6;
  double tol_exact = 1e-6;
  double tol_approx = 1e-3;
  int nx = 4, ny = 4, labels = 2, n_inner = 10;
  double tol = 1e-4;

  explicit CheckGradCmd(CLI::App* app) : cmd(app) {
    cmd.bind_string("module", module, "toy or segmentation");
    common.bind(cmd);
    cmd.bind_string("kinds", kinds, "estimator tags to check (toy)");
    cmd.bind_double("theta", theta, "evaluation point (toy)");
    cmd.bind_int("n", n, "forward iterations (toy)");
    cmd.bind_double("fd-step", fd_step, "relative central-difference step");
    cmd.bind_double("tol-exact", tol_exact, "relative tolerance, exact chain rules (toy)");
    cmd.bind_double("tol-approx", tol_approx, "relative tolerance, approximate estimators (toy)");
    cmd.bind_int("nx", nx, "fixture width (segmentation)");
    cmd.bind_int("ny", ny, "fixture height (segmentation)");
    cmd.bind_int("labels", labels, "fixture label count (segmentation)");
    cmd.bind_int("n-inner", n_inner, "lower-level iterations (segmentation)");
    cmd.bind_double("tol", tol, "relative tolerance (segmentation)");
  }

  int run() {
    cmd.apply_config();
    if (module != "toy" && module != "segmentation")
      throw InvalidInput("check-grad: --module must be toy or segmentation");

    const io::Config rc = cmd.resolved();
    const fs::path out(cmd.out_dir);
    fs::create_directories(out);
    write_manifest(out, rc, {});
    CsvFile check((out / "check.csv").string(), rc.hash_hex(),
                  {"module", "item", "estimate", "reference", "rel_error", "tol", "status"});

    int passed = 0, total = 0;
    auto record = [&](const std::string& item, double est, double ref_v, double tolerance) {
      const double rel = std::abs(est - ref_v) / std::max(std::abs(ref_v), 1e-12);
      const bool ok = rel <= tolerance;
      ++total;
      passed += ok ? 1 : 0;
      check.row({module, item, CsvFile::num(est), CsvFile::num(ref_v), CsvFile::num(rel),
                 CsvFile::num(tolerance), ok ? "pass" : "fail"});
      std::cout << (ok ? "PASS " : "FAIL ") << module << "/" << item
                << " rel_error=" << CsvFile::num(rel) << " tol=" << CsvFile::num(tolerance)
                << "\n";
    };

    if (module == "toy") {
      toy::ToyConfig cfg = common.base();
      cfg.theta_eval = theta;
      cfg.n_forward = n;
      cfg.validate();
      for (const toy::EstimatorKind kind : parse_kinds(kinds)) {
        const double est = toy::run_estimator(kind, cfg).gradient(0);
        const double h = fd_step * std::max(1.0, std::abs(theta));
        const double fd =
            (toy::unrolled_loss(kind, cfg, theta + h) - toy::unrolled_loss(kind, cfg, theta - h)) /
            (2.0 * h);
        const bool exact =
            kind == toy::EstimatorKind::ProjGD || kind == toy::EstimatorKind::BregmanFB;
        record(toy::estimator_name(kind), est, fd, exact ? tol_exact : tol_approx);
      }
    } else {
      const seg::SegInstance inst = seg::checker_instance(nx, ny, labels);
      const seg::LinearUnaryModel model = seg::checker_model(labels);
      const Vec theta0 = model.flatten();
      const seg::BatchEval ev = seg::evaluate_batch({inst}, model, n_inner);
      // Steps are frozen at the base parameters: the reverse sweep
      // differentiates the composite with the step sizes it actually ran.
      const seg::SolveResult sol0 = seg::solve_instance(inst, labels, theta0, n_inner);
      auto probe = [&](const Vec& th) {
        const seg::SolveResult s =
            seg::solve_instance(inst, labels, th, n_inner, sol0.tau, sol0.sigma);
        return seg::softmax_loss(s.state.u, inst.gt).value;
      };
      for (Index c = 0; c < theta0.size(); ++c) {
        const double h = fd_step * std::max(1.0, std::abs(theta0(c)));
        Vec tp = theta0, tm = theta0;
        tp(c) += h;
        tm(c) -= h;
        const double fd = (probe(tp) - probe(tm)) / (2.0 * h);
        record("coord-" + std::to_string(c), ev.gradient(c), fd, tol);
      }
    }

    std::cout << "gradient check: " << passed << "/" << total << " passed\n";
    return passed == total ? 0 : 2;
  }
};

// ------------------------------------------------------- segmentation --------

std::vector<seg::SegInstance> load_dataset(const std::string& manifest, Index labels,
                                           double gamma) {
  std::vector<seg::SegInstance> dataset;
  for (const auto& [fpath, gpath] : io::read_dataset_manifest(manifest)) {
    const io::ImageU8 fimg = io::read_pnm(fpath);
    const io::ImageU8 gimg = io::read_pnm(gpath);
    if (gimg.width != fimg.width || gimg.height != fimg.height || gimg.channels != 1)
      throw InvalidInput(gpath + ": ground truth must be a single-channel image of size " +
                         std::to_string(fimg.width) + "x" + std::to_string(fimg.height));
    const seg::Grid g{fimg.width, fimg.height};
    dataset.push_back(
        seg::make_instance(g, io::features_from_image(fimg), io::labels_from_image(gimg), labels,
                           gamma));
  }
  if (dataset.empty()) throw InvalidInput(manifest + ": empty dataset");
  return dataset;
}

struct SegTrainCmd {
  Command cmd;
  std::string manifest_path;
  std::string synthetic;
  std::string method = "adam";
  int labels = 3;
  int iters = 200;
  double rate = 1e-3;
  double beta = 0.0;
  int n_inner = 100;
  double gamma = 10.0;
  double feature_scale = 10.0;

  explicit SegTrainCmd(CLI::App* app) : cmd(app) {
    cmd.bind_string("manifest", manifest_path, "dataset manifest (features;gt per line)");
    cmd.bind_string("synthetic", synthetic, "built-in dataset, NXxNYxCOUNT");
    cmd.bind_string("method", method, "outer optimizer: gd, ipiano, or adam");
    cmd.bind_int("labels", labels, "number of labels");
    cmd.bind_int("iters", iters, "outer iterations");
    cmd.bind_double("rate", rate, "outer step size");
    cmd.bind_double("beta", beta, "inertia (ipiano)");
    cmd.bind_int("n-inner", n_inner, "lower-level iterations per solve");
    cmd.bind_double("gamma", gamma, "contrast-weight decay");
    cmd.bind_double("feature-scale", feature_scale, "synthetic feature magnitude");
  }

  int run() {
    cmd.apply_config();
    if (manifest_path.empty() == synthetic.empty())
      throw InvalidInput("segment-train: give exactly one of --manifest or --synthetic");

    std::vector<seg::SegInstance> dataset;
    if (!synthetic.empty()) {
      const std::vector<std::string> parts = split(synthetic, 'x');
      if (parts.size() != 3)
        throw InvalidInput("--synthetic expects NXxNYxCOUNT, got '" + synthetic + "'");
      const int snx = io::parse_int(trim(parts[0]), "synthetic nx");
      const int sny = io::parse_int(trim(parts[1]), "synthetic ny");
      const int count = io::parse_int(trim(parts[2]), "synthetic count");
      dataset = seg::synthetic_dataset(snx, sny, count, feature_scale, gamma);
      if (labels != 3)
        throw InvalidInput("segment-train: the synthetic dataset has exactly 3 labels");
    } else {
      dataset = load_dataset(manifest_path, labels, gamma);
    }

    const io::Config rc = cmd.resolved();
    const fs::path out(cmd.out_dir);
    fs::create_directories(out);
    write_manifest(out, rc, {});

    seg::TrainConfig tc;
    tc.n_inner = n_inner;
    tc.outer.method = parse_method(method);
    tc.outer.iterations = iters;
    tc.outer.rate = rate;
    tc.outer.beta = beta;

    const Index channels = dataset.front().features.cols();
    const seg::TrainResult res = seg::train(dataset, seg::synthetic_init(channels, labels), tc);

    CsvFile log((out / "training_log.csv").string(), rc.hash_hex(),
                {"iter", "loss", "pixel_acc", "mean_iou", "seconds"});
    for (const seg::TrainRow& r : res.rows)
      log.row({CsvFile::num(r.iter), CsvFile::num(r.loss), CsvFile::num(r.pixel_acc),
               CsvFile::num(r.mean_iou), CsvFile::num(r.seconds)});
    io::save_model((out / "model.txt").string(), res.model);

    if (!res.rows.empty()) {
      const seg::TrainRow& first = res.rows.front();
      const seg::TrainRow& last = res.rows.back();
      std::cout << "trained " << labels << " labels on " << dataset.size()
                << " images: loss " << CsvFile::num(first.loss) << " -> "
                << CsvFile::num(last.loss) << ", pixel-acc " << CsvFile::num(last.pixel_acc)
                << ", mean-iou " << CsvFile::num(last.mean_iou) << "\n";
    }
    std::cout << "wrote " << (out / "model.txt").string() << "\n";
    return 0;
  }
};

struct SegInferCmd {
  Command cmd;
  std::string model_path;
  std::string image_path;
  std::string gt_path;
  int n_inner = 100;
  double gamma = 10.0;

  explicit SegInferCmd(CLI::App* app) : cmd(app) {
    cmd.bind_string("model", model_path, "trained model file");
    cmd.bind_string("image", image_path, "feature image (P5 or P6)");
    cmd.bind_string("gt", gt_path, "ground-truth label image (optional, enables metrics)");
    cmd.bind_int("n-inner", n_inner, "lower-level iterations");
    cmd.bind_double("gamma", gamma, "contrast-weight decay");
  }

  int run() {
    cmd.apply_config();
    if (model_path.empty() || image_path.empty())
      throw InvalidInput("segment-infer: --model and --image are required");

    const seg::LinearUnaryModel model = io::load_model(model_path);
    const io::ImageU8 img = io::read_pnm(image_path);
    Mat features = io::features_from_image(img);
    if (features.cols() != model.channels())
      throw InvalidInput(image_path + ": expected " + std::to_string(model.channels()) +
                         " channels, got " + std::to_string(features.cols()));
    const seg::Grid g{img.width, img.height};
    const Index K = model.labels();

    Eigen::VectorXi gt;
    if (!gt_path.empty()) {
      const io::ImageU8 gimg = io::read_pnm(gt_path);
      if (gimg.width != img.width || gimg.height != img.height || gimg.channels != 1)
        throw InvalidInput(gt_path + ": ground truth must be a single-channel image of size " +
                           std::to_string(img.width) + "x" + std::to_string(img.height));
      gt = io::labels_from_image(gimg);
    } else {
      gt = Eigen::VectorXi::Ones(g.npix());
    }

    const io::Config rc = cmd.resolved();
    const fs::path out(cmd.out_dir);
    fs::create_directories(out);
    write_manifest(out, rc, {});

    const seg::SegInstance inst = seg::make_instance(g, std::move(features), gt, K, gamma);
    const seg::SolveResult sol = seg::infer(inst, model, n_inner);
    const std::vector<int> labels = seg::argmax_labels(sol.state.u);
    io::write_pnm((out / "labels.pgm").string(), io::labels_to_image(g, labels));
    std::cout << "wrote " << (out / "labels.pgm").string() << "\n";

    if (!gt_path.empty()) {
      const double acc = seg::pixel_accuracy(labels, inst.gt);
      const double miou = seg::mean_iou(labels, inst.gt, K);
      CsvFile metrics((out / "metrics.csv").string(), rc.hash_hex(), {"pixel_acc", "mean_iou"});
      metrics.row({CsvFile::num(acc), CsvFile::num(miou)});
      std::cout << "pixel-acc " << CsvFile::num(acc) << ", mean-iou " << CsvFile::num(miou)
                << "\n";
    }
    return 0;
  }
};

}  // namespace

// ----------------------------------------------------------- entry -----------

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"gradient-based bilevel optimization with nonsmooth lower-level solvers"};
  app.require_subcommand(0, 1);

  ToyGradientsCmd toy_gradients(
      app.add_subcommand("toy-gradients", "estimator gradients of the 1d study problem"));
  ToySweepCmd toy_sweep(
      app.add_subcommand("toy-sweep", "estimator-error sweep over theta and iteration counts"));
  CheckGradCmd check_grad(
      app.add_subcommand("check-grad", "compare gradients against finite differences"));
  SegTrainCmd seg_train(
      app.add_subcommand("segment-train", "train the multi-label segmentation model"));
  SegInferCmd seg_infer(
      app.add_subcommand("segment-infer", "segment an image with a trained model"));

  if (argc <= 1) {
    std::cout << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (toy_gradients.cmd.app->parsed()) return toy_gradients.run();
    if (toy_sweep.cmd.app->parsed()) return toy_sweep.run();
    if (check_grad.cmd.app->parsed()) return check_grad.run();
    if (seg_train.cmd.app->parsed()) return seg_train.run();
    if (seg_infer.cmd.app->parsed()) return seg_infer.run();
    std::cout << app.help();
    return 1;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cli_main(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.emplace_back("bilevel");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const auto& s : full) argv.push_back(s.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace bilevel::cli
