// genlabel: data generation, training, evaluation and the toy analyses.

#include "genlabel/augment.hpp"
#include "genlabel/data.hpp"
#include "genlabel/density.hpp"
#include "genlabel/eval.hpp"
#include "genlabel/models.hpp"
#include "genlabel/theory.hpp"
#include "genlabel/train.hpp"
#include "genlabel/util.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace genlabel;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

/// Collects artifacts and writes the manifest after everything else.
class Run {
 public:
  explicit Run(std::string command) : command_(std::move(command)), start_(Clock::now()) {}

  void set_config(Json c) { config_ = std::move(c); }
  void set_seed(std::uint64_t s) { seed_ = s; }
  void set_metrics(Json m) { metrics_ = std::move(m); }
  void add_fingerprint(const std::string& path) {
    fingerprints_[path] = file_fingerprint(path);
  }

  void emit(const std::string& path, const std::string& text) {
    if (path.empty()) return;
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    write_text_file(path, text);
    artifacts_.push_back(path);
  }

  void finish(const std::string& manifest_path) {
    if (manifest_path.empty()) return;
    Json m;
    m["command"] = command_;
    m["config"] = config_;
    m["seed"] = seed_;
    m["dataset_fingerprint"] = fingerprints_;
    m["metrics"] = metrics_;
    m["artifacts"] = artifacts_;
    m["duration_seconds"] = std::chrono::duration<double>(Clock::now() - start_).count();
    const fs::path p(manifest_path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    write_text_file(manifest_path, m.dump(2) + "\n");
  }

 private:
  using Clock = std::chrono::steady_clock;
  std::string command_;
  Clock::time_point start_;
  Json config_ = Json::object();
  std::uint64_t seed_ = 0;
  Json metrics_ = Json::object();
  Json fingerprints_ = Json::object();
  std::vector<std::string> artifacts_;
};

Dataset load_data(const std::string& path, const std::string& label_column, Run& run) {
  if (!fs::exists(path)) throw ConfigError("dataset not found: " + path);
  CsvLoadResult r = load_csv(path, label_column);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  run.add_fingerprint(path);
  return std::move(r.data);
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// Either a bare config object or a manifest carrying one under "config".
Json read_config(const std::string& path) {
  if (path.empty()) return Json::object();
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse config " + path + ": " + e.what());
  }
  if (j.is_object() && j.contains("config") && j.contains("artifacts")) return j["config"];
  return j;
}

// Train-time flags. Only the ones given on the command line override the config.
struct TrainFlags {
  std::string config, data, val, label_column, out_dir = "run";
  std::optional<std::string> method, model, loss, optimizer, gen_kind, selection, labeling,
      attack_norm, mi_mode;
  std::optional<int> epochs, batch_size, fold_count, jobs, robust_every;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr, momentum, weight_decay, alpha, gamma, sigma, epsilon, gm_eps,
      kde_bandwidth;
  std::vector<int> hidden;
  std::vector<double> gamma_grid;
  bool no_bias = false, exclude_mi = false, kde_diagonal = false, posterior = false;

  void attach(CLI::App* app, bool with_val) {
    app->add_option("--config", config, "JSON config (or a previous manifest)");
    app->add_option("--data", data, "training CSV")->required();
    if (with_val) app->add_option("--val", val, "validation CSV for checkpoint selection");
    app->add_option("--label-column", label_column, "label column name (default: last)");
    app->add_option("--out-dir", out_dir, "output directory");
    app->add_option("--method", method,
                    "vanilla|mixup|mixup_no_mi|genlabel_input|genlabel_latent|gen_classifier");
    app->add_option("--model", model, "logreg|mlp2");
    app->add_option("--hidden", hidden, "hidden widths")->delimiter(',');
    app->add_flag("--no-bias", no_bias, "drop bias terms");
    app->add_option("--loss", loss, "ce|mse");
    app->add_option("--epochs", epochs);
    app->add_option("--batch-size", batch_size);
    app->add_option("--seed", seed);
    app->add_option("--optimizer", optimizer, "sgd|adam");
    app->add_option("--lr", lr);
    app->add_option("--momentum", momentum);
    app->add_option("--weight-decay", weight_decay);
    app->add_option("--alpha", alpha, "Beta(alpha, alpha) mixing");
    app->add_option("--gamma", gamma, "GenLabel blend weight");
    app->add_option("--labeling", labeling, "linear|logistic|genlabel|blend");
    app->add_option("--logistic-sigma", sigma);
    app->add_flag("--exclude-mi", exclude_mi);
    app->add_option("--mi-mode", mi_mode, "redraw|drop");
    app->add_flag("--posterior", posterior, "weight likelihoods by class priors");
    app->add_option("--gen-kind", gen_kind, "gm|kde|cv");
    app->add_option("--gm-eps", gm_eps);
    app->add_option("--kde-bandwidth", kde_bandwidth);
    app->add_flag("--kde-diagonal", kde_diagonal);
    app->add_option("--selection", selection, "last|clean|robust");
    app->add_option("--attack-epsilon", epsilon);
    app->add_option("--attack-norm", attack_norm, "linf|l2");
    app->add_option("--robust-every", robust_every);
    app->add_option("--gamma-grid", gamma_grid)->delimiter(',');
    app->add_option("--folds", fold_count);
    app->add_option("--jobs", jobs);
  }

  Json patch() const {
    Json j = Json::object();
    if (method) j["method"] = *method;
    if (model) j["model_kind"] = *model;
    if (!hidden.empty()) j["hidden"] = hidden;
    if (no_bias) j["use_bias"] = false;
    if (loss) j["loss"] = *loss;
    if (epochs) j["epochs"] = *epochs;
    if (batch_size) j["batch_size"] = *batch_size;
    if (seed) j["seed"] = *seed;
    Json o = Json::object();
    if (optimizer) o["kind"] = *optimizer;
    if (lr) o["learning_rate"] = *lr;
    if (momentum) o["momentum"] = *momentum;
    if (weight_decay) o["weight_decay"] = *weight_decay;
    if (!o.empty()) j["optimizer"] = o;
    Json m = Json::object();
    if (alpha) m["alpha"] = *alpha;
    if (gamma) m["gamma"] = *gamma;
    if (labeling) m["labeling"] = *labeling;
    if (sigma) m["logistic_sigma"] = *sigma;
    if (exclude_mi) m["exclude_mi"] = true;
    if (mi_mode) m["mi_mode"] = *mi_mode;
    if (posterior) m["posterior"] = true;
    if (!m.empty()) j["mix"] = m;
    if (gen_kind) j["gen_kind"] = *gen_kind;
    if (gm_eps) j["gm_eps_reg"] = *gm_eps;
    if (kde_bandwidth) j["kde_bandwidth"] = *kde_bandwidth;
    if (kde_diagonal) j["kde_diagonal"] = true;
    if (selection) j["selection"] = *selection;
    if (epsilon) j["attack_epsilon"] = *epsilon;
    if (attack_norm) j["attack_norm"] = *attack_norm;
    if (robust_every) j["robust_every"] = *robust_every;
    if (!gamma_grid.empty()) j["gamma_grid"] = gamma_grid;
    if (fold_count) j["fold_count"] = *fold_count;
    if (jobs) j["jobs"] = *jobs;
    return j;
  }

  TrainConfig resolve() const {
    TrainConfig cfg = train_config_from_json(read_config(config));
    cfg = train_config_from_json(patch(), cfg);
    cfg.validate();
    return cfg;
  }
};

// A model file holds either a classifier or a generative model.
struct LoadedModel {
  std::optional<Classifier> classifier;
  std::optional<GenerativeModel> generative;
  bool posterior = false;

  std::vector<int> predict(const MatrixXd& x) const {
    if (classifier) return genlabel::predict(*classifier, x);
    return generative_predict(*generative, x, posterior);
  }
  const Classifier& require_classifier(const std::string& what) const {
    if (!classifier) throw ConfigError(what + " needs a discriminative model");
    return *classifier;
  }
};

LoadedModel load_model(const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("model not found: " + path);
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse model " + path + ": " + e.what());
  }
  LoadedModel m;
  const std::string kind = j.value("kind", "");
  if (kind == "gm" || kind == "kde") {
    m.generative = generative_model_from_json(j);
    m.posterior = j.value("posterior", false);
  } else {
    m.classifier = classifier_from_json(j);
  }
  return m;
}

Json metrics_json(const LoadedModel& model, const Dataset& ds) {
  const auto pred = model.predict(ds.features);
  MetricBundle b;
  Eigen::Index hit = 0;
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    if (pred[static_cast<size_t>(i)] == ds.label_of(i)) ++hit;
  b.clean_accuracy = static_cast<double>(hit) / static_cast<double>(ds.size());
  b.per_class_accuracy = per_class_accuracy(pred, ds);
  b.n_eval = ds.size();
  return to_json(b);
}

struct GridFlags {
  double x_lo = -1, x_hi = 1, y_lo = -1, y_hi = 1;
  int resolution = 100;
  void attach(CLI::App* app) {
    app->add_option("--x-lo", x_lo);
    app->add_option("--x-hi", x_hi);
    app->add_option("--y-lo", y_lo);
    app->add_option("--y-hi", y_hi);
    app->add_option("--resolution", resolution);
  }
  GridSpec spec() const {
    GridSpec g{x_lo, x_hi, y_lo, y_hi, resolution};
    g.validate();
    return g;
  }
  Json json() const {
    return {{"x_lo", x_lo}, {"x_hi", x_hi}, {"y_lo", y_lo}, {"y_hi", y_hi}, {"resolution", resolution}};
  }
};

void print_json(const Json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GenLabel: mixup relabeling with class-conditional densities"};
  app.require_subcommand(1);

  // gen-data
  std::string gd_name, gd_out, gd_manifest;
  int gd_n = 100;
  std::optional<double> gd_noise;
  std::uint64_t gd_seed = 0;
  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset as CSV");
  gen->add_option("name", gd_name, "dataset id")->required();
  gen->add_option("--n", gd_n, "samples per class");
  gen->add_option("--noise", gd_noise, "noise scale (dataset specific)");
  gen->add_option("--seed", gd_seed);
  gen->add_option("-o,--out", gd_out, "output CSV")->required();
  gen->add_option("--manifest", gd_manifest);

  // train / cv
  TrainFlags tf;
  auto* trn = app.add_subcommand("train", "train a model; writes model.json and manifest.json");
  tf.attach(trn, true);
  TrainFlags cf;
  auto* cv = app.add_subcommand("cv", "cross-validate gamma and the density kind");
  cf.attach(cv, false);

  // eval
  std::string ev_model, ev_data, ev_label, ev_out, ev_manifest;
  bool ev_margin = false;
  GridFlags ev_grid;
  auto* ev = app.add_subcommand("eval", "clean accuracy and grid margin");
  ev->add_option("--model", ev_model)->required();
  ev->add_option("--data", ev_data)->required();
  ev->add_option("--label-column", ev_label);
  ev->add_flag("--margin", ev_margin, "also report the 2-D grid margin");
  ev_grid.attach(ev);
  ev->add_option("-o,--out", ev_out, "metrics JSON");
  ev->add_option("--manifest", ev_manifest);

  // attack
  std::string at_model, at_data, at_label, at_out, at_manifest, at_norm = "linf";
  double at_eps = 0.2;
  auto* at = app.add_subcommand("attack", "FGSM robust accuracy");
  at->add_option("--model", at_model)->required();
  at->add_option("--data", at_data)->required();
  at->add_option("--label-column", at_label);
  at->add_option("--epsilon", at_eps);
  at->add_option("--norm", at_norm, "linf|l2");
  at->add_option("-o,--out", at_out, "metrics JSON");
  at->add_option("--manifest", at_manifest);

  // boundary
  std::string bd_model, bd_out, bd_manifest;
  GridFlags bd_grid;
  auto* bd = app.add_subcommand("boundary", "decision-boundary grid CSV");
  bd->add_option("--model", bd_model)->required();
  bd_grid.attach(bd);
  bd->add_option("-o,--out", bd_out, "grid CSV")->required();
  bd->add_option("--manifest", bd_manifest);

  // theory
  std::string th_preset, th_out, th_manifest, th_loss = "single_term", th_model = "logreg";
  Example3Params ex3;
  int th_points = 200, th_jobs = 1, th_mc = 0;
  double th_c = 1.0, th_tau = 0.0, th_sigma1 = 10.0;
  std::uint64_t th_seed = 0;
  auto* th = app.add_subcommand("theory", "toy analyses: example1, example3, fig6");
  th->add_option("preset", th_preset, "example1|example3|fig6")
      ->required()
      ->check(CLI::IsMember({"example1", "example3", "fig6"}));
  th->add_option("--loss", th_loss, "example1 pair loss: single_term|full_mse");
  th->add_option("--r", ex3.r, "example3 radius");
  th->add_option("--n", ex3.n, "example3 copies of the -1 point");
  th->add_option("--sigma", ex3.sigma, "example3 logistic label width");
  th->add_option("--alpha", ex3.alpha, "example3 Beta parameter (>= 1)");
  th->add_option("--points", th_points, "curve points");
  th->add_option("--model", th_model, "fig6 model: logreg|relu");
  th->add_option("--c", th_c, "fig6 sigma2 / sigma1");
  th->add_option("--tau", th_tau, "fig6 off-diagonal correlation");
  th->add_option("--sigma1", th_sigma1, "fig6 sigma1 for the Monte-Carlo A, B");
  th->add_option("--mc-samples", th_mc, "fig6: use Monte-Carlo A, B with this many samples");
  th->add_option("--seed", th_seed);
  th->add_option("--jobs", th_jobs);
  th->add_option("-o,--out", th_out, "curve CSV");
  th->add_option("--manifest", th_manifest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) {
      Run run("gen-data");
      const Dataset ds = make_synthetic(gd_name, gd_n, gd_noise, gd_seed);
      run.set_seed(gd_seed);
      Json cfg{{"name", gd_name}, {"n", gd_n}, {"seed", gd_seed}};
      if (gd_noise) cfg["noise"] = *gd_noise;
      run.set_config(cfg);
      run.emit(gd_out, to_csv(ds));
      run.set_metrics({{"rows", ds.size()}, {"dim", ds.dim()}, {"classes", ds.class_count}});
      run.finish(gd_manifest);
      std::cout << ds.size() << " rows written to " << gd_out << '\n';
    } else if (*trn) {
      Run run("train");
      const TrainConfig cfg = tf.resolve();
      const Dataset data = load_data(tf.data, tf.label_column, run);
      std::optional<Dataset> val;
      if (!tf.val.empty()) val = load_data(tf.val, tf.label_column, run);
      run.set_config(to_json(cfg));
      run.set_seed(cfg.seed);
      const TrainResult r = train(cfg, data, val ? &*val : nullptr);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';

      Json metrics = to_json(r);
      metrics["train_accuracy"] = result_accuracy(r, data);
      if (val) metrics["val_accuracy"] = result_accuracy(r, *val);
      if (r.classifier) {
        run.emit(join(tf.out_dir, "model.json"), to_json(*r.classifier).dump(2) + "\n");
        if (r.generative)
          run.emit(join(tf.out_dir, "generative.json"), to_json(*r.generative).dump(2) + "\n");
      } else if (r.generative) {
        Json g = to_json(*r.generative);
        g["posterior"] = cfg.mix.posterior;
        run.emit(join(tf.out_dir, "model.json"), g.dump(2) + "\n");
      }
      run.set_metrics(metrics);
      run.finish(join(tf.out_dir, "manifest.json"));
      std::cout << "train accuracy " << format_real(metrics["train_accuracy"].get<double>()) << '\n';
    } else if (*cv) {
      Run run("cv");
      TrainConfig cfg = cf.resolve();
      if (cfg.method != Method::genlabel_input && cfg.method != Method::genlabel_latent)
        cfg.method = Method::genlabel_input;
      const Dataset data = load_data(cf.data, cf.label_column, run);
      run.set_config(to_json(cfg));
      run.set_seed(cfg.seed);
      const CVReport rep = cross_validate(cfg, data);
      for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
      const Json j = to_json(rep);
      run.emit(join(cf.out_dir, "cv.json"), j.dump(2) + "\n");
      run.set_metrics({{"cv", j}});
      run.finish(join(cf.out_dir, "manifest.json"));
      std::cout << "selected gamma " << format_real(rep.selected_gamma) << " kind " << rep.selected_kind
                << " (" << rep.runs << " runs)\n";
    } else if (*ev) {
      Run run("eval");
      const LoadedModel model = load_model(ev_model);
      const Dataset ds = load_data(ev_data, ev_label, run);
      run.add_fingerprint(ev_model);
      Json m = metrics_json(model, ds);
      Json cfg{{"model", ev_model}, {"data", ev_data}};
      if (ev_margin) {
        const GridSpec g = ev_grid.spec();
        if (ds.dim() != 2) throw ConfigError("grid margin needs 2-D data");
        const MarginResult mr =
            multiclass_margin(model.predict(g.centres()), g, model.predict(ds.features), ds);
        m["margin"] = mr.margin;
        m["margin_cell_size"] = mr.cell_size;
        m["margin_misclassified"] = mr.misclassified;
        cfg["grid"] = ev_grid.json();
      }
      run.set_config(cfg);
      run.set_metrics(m);
      run.emit(ev_out, m.dump(2) + "\n");
      run.finish(ev_manifest);
      print_json(m);
    } else if (*at) {
      Run run("attack");
      const LoadedModel model = load_model(at_model);
      const Classifier& clf = model.require_classifier("attack");
      const Dataset ds = load_data(at_data, at_label, run);
      run.add_fingerprint(at_model);
      AttackConfig ac;
      ac.epsilon = at_eps;
      if (at_norm == "linf") ac.norm = AttackNorm::linf;
      else if (at_norm == "l2") ac.norm = AttackNorm::l2;
      else throw ConfigError("unknown norm '" + at_norm + "'");
      ac.validate();
      Json m = metrics_json(model, ds);
      m["robust_accuracy"] = robust_accuracy(clf, ds, ac);
      m["epsilon"] = at_eps;
      m["norm"] = at_norm;
      run.set_config({{"model", at_model}, {"data", at_data}, {"epsilon", at_eps}, {"norm", at_norm}});
      run.set_metrics(m);
      run.emit(at_out, m.dump(2) + "\n");
      run.finish(at_manifest);
      print_json(m);
    } else if (*bd) {
      Run run("boundary");
      const LoadedModel model = load_model(bd_model);
      const Classifier& clf = model.require_classifier("boundary");
      run.add_fingerprint(bd_model);
      const GridSpec g = bd_grid.spec();
      const BoundaryGrid grid = boundary_grid(clf, g);
      run.set_config({{"model", bd_model}, {"grid", bd_grid.json()}});
      run.emit(bd_out, boundary_to_csv(grid));
      run.set_metrics({{"cells", grid.points.rows()}});
      run.finish(bd_manifest);
      std::cout << grid.points.rows() << " cells written to " << bd_out << '\n';
    } else if (*th) {
      Run run("theory");
      run.set_seed(th_seed);
      Json cfg{{"preset", th_preset}};
      Json m;
      if (th_preset == "example1") {
        const Example1Loss loss = th_loss == "full_mse" ? Example1Loss::full_mse : Example1Loss::single_term;
        if (th_loss != "single_term" && th_loss != "full_mse") throw ConfigError("unknown loss '" + th_loss + "'");
        const auto mix = example1_optimal_theta(Example1Scheme::mixup, loss);
        const auto nomi = example1_optimal_theta(Example1Scheme::mixup_without_mi, loss);
        cfg["loss"] = th_loss;
        m = {{"theta_mixup", mix.theta_closed},
             {"theta_mixup_quadrature", mix.theta_quadrature},
             {"theta_no_mi", nomi.theta_closed},
             {"theta_no_mi_quadrature", nomi.theta_quadrature},
             {"margin_mixup", std::min(mix.theta_closed, 1.0 - mix.theta_closed)},
             {"margin_no_mi", std::min(nomi.theta_closed, 1.0 - nomi.theta_closed)}};
        std::cout << "theta_mixup " << format_real(std::round(mix.theta_quadrature * 1e6) / 1e6)
                  << "\ntheta_no_mi " << format_real(std::round(nomi.theta_quadrature * 1e6) / 1e6)
                  << '\n';
      } else if (th_preset == "example3") {
        cfg.update({{"r", ex3.r}, {"n", ex3.n}, {"sigma", ex3.sigma}, {"alpha", ex3.alpha}});
        const double pi = std::numbers::pi;
        for (auto [name, s] : {std::pair{"vanilla", Example3Scheme::vanilla},
                               std::pair{"mixup", Example3Scheme::mixup},
                               std::pair{"genlabel", Example3Scheme::genlabel}}) {
          const PhiStar ps = example3_phi_star(s, ex3);
          m[std::string("phi_") + name] = ps.phi;
          m[std::string("phi_") + name + "_over_pi"] = ps.phi / pi;
          std::cout << "phi_" << name << " " << format_real(std::round(ps.phi / pi * 1e4) / 1e4)
                    << " pi\n";
        }
        if (!th_out.empty()) run.emit(th_out, to_csv(example3_curve(ex3, th_points, th_jobs)));
      } else {
        TheoryParams tp = make_theory_params(th_c, th_tau, 2, th_sigma1);
        if (th_mc > 0) {
          const AbEstimate est = estimate_AB(tp, th_mc, th_seed);
          tp.A = est.A;
          tp.B = est.B;
          m["A_stderr"] = est.A_stderr;
          m["B_stderr"] = est.B_stderr;
        }
        ChainSetup setup;
        setup.seed = th_seed;
        setup.jobs = th_jobs;
        if (th_model == "relu") setup.model = TheoryModel::relu_mlp;
        else if (th_model != "logreg") throw ConfigError("unknown model '" + th_model + "'");
        cfg.update({{"model", th_model}, {"c", th_c}, {"tau", th_tau}, {"sigma1", th_sigma1},
                    {"mc_samples", th_mc}});
        const ChainReport rep = verify_inequality_chain(tp, setup);
        m["A"] = tp.A;
        m["B"] = tp.B;
        m["admissible"] = rep.admissible_count;
        m["excluded"] = rep.excluded_count;
        m["holding"] = rep.holding_count;
        m["pass_fraction"] = rep.pass_fraction();
        m["min_slack_mix_gen"] = rep.min_slack_mix_gen;
        m["min_slack_gen_adv"] = rep.min_slack_gen_adv;
        run.emit(th_out, to_csv(rep));
        std::cout << "chain holds at " << rep.holding_count << " of " << rep.admissible_count
                  << " admissible angles (" << rep.excluded_count << " excluded)\n";
      }
      run.set_config(cfg);
      run.set_metrics(m);
      run.finish(th_manifest);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
