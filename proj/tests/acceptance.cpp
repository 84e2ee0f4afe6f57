// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "genlabel/theory.hpp"
#include "genlabel/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace genlabel;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kSeeds = 5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string join(const std::vector<double>& v, const char* f = "%.4f") {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(f, v[i]);
  return s;
}

Outcome example1() {
  const auto mix = example1_optimal_theta(Example1Scheme::mixup);
  const auto nomi = example1_optimal_theta(Example1Scheme::mixup_without_mi);
  const bool ok = std::abs(mix.theta_closed - 7.0 / 16.0) < 1e-3 &&
                  std::abs(mix.theta_quadrature - 7.0 / 16.0) < 1e-3 &&
                  std::abs(nomi.theta_closed - 0.5) < 1e-3 &&
                  std::abs(nomi.theta_quadrature - 0.5) < 1e-3;
  return {ok, fmt("theta_mixup %.5f (quad %.5f), theta_no_mi %.5f (quad %.5f)", mix.theta_closed,
                  mix.theta_quadrature, nomi.theta_closed, nomi.theta_quadrature)};
}

Outcome logistic_curve() {
  double worst = 0.0;
  for (double sigma : {0.05, 0.1, 0.2}) {
    GaussianModel<double> m;
    for (double mu : {1.0, 0.0}) {
      m.means.push_back(VectorXd::Constant(1, mu));
      m.covariances.push_back(MatrixXd::Constant(1, 1, sigma * sigma));
      m.priors.push_back(0.5);
      m.eps_reg.push_back(0.0);
    }
    m.factorize();
    const GenerativeModel gm = m;
    for (int i = 0; i <= 1000; ++i) {
      const double lam = i / 1000.0;
      const double got = genlabel::genlabel(gm, VectorXd::Constant(1, lam))[0];
      const double expect = 1.0 / (1.0 + std::exp(-(lam - 0.5) / (sigma * sigma)));
      worst = std::max(worst, std::abs(got - expect));
    }
  }
  return {worst < 1e-10, fmt("max abs error %.3e", worst)};
}

Outcome example3() {
  const Example3Params p;
  const double v = example3_phi_star(Example3Scheme::vanilla, p).phi / kPi;
  const double m = example3_phi_star(Example3Scheme::mixup, p).phi / kPi;
  const double g = example3_phi_star(Example3Scheme::genlabel, p).phi / kPi;
  const bool ok = std::abs(v - 0.22) <= 0.01 && std::abs(m - 0.30) <= 0.01 && std::abs(g - 0.25) <= 0.01;
  return {ok, fmt("phi_vanilla %.4f pi, phi_mixup %.4f pi, phi_genlabel %.4f pi", v, m, g)};
}

Outcome chain() {
  const TheoryParams params = make_theory_params(1.0, 0.0, 2);
  ChainSetup setup;
  const ChainReport lr = verify_inequality_chain(params, setup);
  setup.model = TheoryModel::relu_mlp;
  const ChainReport relu = verify_inequality_chain(params, setup);
  const bool ok = lr.admissible_count > 0 && lr.holding_count == lr.admissible_count &&
                  relu.admissible_count > 0 && relu.pass_fraction() >= 0.99;
  return {ok, fmt("logreg %d/%d admissible, relu %d/%d admissible (%d excluded)", lr.holding_count,
                  lr.admissible_count, relu.holding_count, relu.admissible_count, relu.excluded_count)};
}

Outcome three_dots() {
  const Dataset dots = make_synthetic("three-dots", 1, std::nullopt, 0);
  const GridSpec grid{-10, 10, -10, 10, 400};
  const double gap = 2.0 * std::max(grid.cell_x(), grid.cell_y());
  bool ok = true;
  std::string detail;
  for (int seed = 0; seed < kSeeds; ++seed) {
    TrainConfig c;
    c.model_kind = ModelKind::logreg;
    c.epochs = 10000;
    c.opt.weight_decay = 3e-3;
    c.opt.milestones = {0.9};
    c.seed = static_cast<std::uint64_t>(seed);
    c.mix.gamma = 1.0;
    double margin[3];
    const Method methods[] = {Method::vanilla, Method::mixup, Method::genlabel_input};
    for (int k = 0; k < 3; ++k) {
      c.method = methods[k];
      const MarginResult r = multiclass_margin(*train(c, dots).classifier, dots, grid);
      margin[k] = r.misclassified ? -1.0 : r.margin;
    }
    ok = ok && margin[2] - margin[0] > gap && margin[0] - margin[1] > gap;
    detail += fmt("%sseed %d gen %.3f van %.3f mix %.3f", seed ? "; " : "", seed, margin[2], margin[0], margin[1]);
  }
  return {ok, detail};
}

Outcome two_circle() {
  std::vector<double> van, mix, cv;
  std::string picks;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto s = static_cast<std::uint64_t>(seed);
    const Dataset tr = make_synthetic("two-circle", 250, std::nullopt, s);
    const Dataset te = make_synthetic("two-circle", 250, std::nullopt, s + 1000);
    const Dataset va = make_synthetic("two-circle", 250, std::nullopt, s + 2000);
    TrainConfig c;
    c.hidden = {64, 64};
    c.epochs = 150;
    c.batch_size = 16;
    c.opt.kind = OptimizerKind::adam;
    c.opt.learning_rate = 0.003;
    c.selection = Selection::clean;
    c.kde.bandwidth = 0.1;
    c.seed = s;
    c.method = Method::vanilla;
    van.push_back(result_accuracy(train(c, tr, &va), te));
    c.method = Method::mixup;
    mix.push_back(result_accuracy(train(c, tr, &va), te));
    c.method = Method::genlabel_input;
    c.gen_kind = GenKind::cv;
    const TrainResult r = train(c, tr, &va);
    cv.push_back(result_accuracy(r, te));
    picks += fmt("%s%s/%.1f", seed ? " " : "", r.cv->selected_kind.c_str(), r.cv->selected_gamma);
  }
  const double v = mean(van), m = mean(mix), g = mean(cv);
  const bool ok = v - m >= 0.10 && g >= v - 0.03;
  return {ok, fmt("mean vanilla %.4f mixup %.4f genlabel-cv %.4f; per seed vanilla [%s] mixup [%s] cv [%s]; cv picks %s",
                  v, m, g, join(van).c_str(), join(mix).c_str(), join(cv).c_str(), picks.c_str())};
}

Outcome gauss9() {
  std::vector<double> mix, nomi, frac;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto s = static_cast<std::uint64_t>(seed);
    const Dataset tr = make_synthetic("gauss9", 100, std::nullopt, s);
    const Dataset te = make_synthetic("gauss9", 100, std::nullopt, s + 1000);
    TrainConfig c;
    c.hidden = {32, 32};
    c.batch_size = 32;
    c.opt.kind = OptimizerKind::adam;
    c.opt.learning_rate = 0.003;
    c.seed = s;
    c.method = Method::mixup;
    const TrainResult r = train(c, tr);
    mix.push_back(result_accuracy(r, te));
    frac.push_back(static_cast<double>(r.mi_flagged) / static_cast<double>(r.mixes));
    c.method = Method::mixup_no_mi;
    nomi.push_back(result_accuracy(train(c, tr), te));
  }
  const bool ok = mean(nomi) >= mean(mix) - 0.005 && mean(frac) > 0.0;
  return {ok, fmt("mean mixup %.4f no-MI %.4f, MI fraction [%s]", mean(mix), mean(nomi), join(frac, "%.3f").c_str())};
}

Outcome fgsm_pair() {
  std::vector<double> mix, gen;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto s = static_cast<std::uint64_t>(seed);
    const Dataset tr = gaussian_pair(20, 0.25, s);
    const Dataset te = gaussian_pair(500, 0.25, s + 1000);
    TrainConfig c;
    c.model_kind = ModelKind::logreg;
    c.epochs = 200;
    c.batch_size = 32;
    c.seed = s;
    AttackConfig attack;
    attack.epsilon = 0.2;
    c.method = Method::mixup;
    mix.push_back(robust_accuracy(*train(c, tr).classifier, te, attack));
    c.method = Method::genlabel_input;
    c.gen_kind = GenKind::gm;
    c.mix.gamma = 1.0;
    gen.push_back(robust_accuracy(*train(c, tr).classifier, te, attack));
  }
  const bool ok = mean(gen) >= mean(mix);
  return {ok, fmt("mean robust mixup %.4f genlabel %.4f; per seed mixup [%s] genlabel [%s]", mean(mix),
                  mean(gen), join(mix).c_str(), join(gen).c_str())};
}

Outcome property_suites() {
  const std::string cmd = std::string("\"") + UNIT_TESTS_PATH + "\" --minimal > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  const bool ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
  return {ok, ok ? "unit suite green" : "unit suite reported failures"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;  // <= 0: no limit
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "example 1 margins", 1.0, example1},
      {2, "genlabel logistic curve", 1.0, logistic_curve},
      {3, "example 3 angles", 30.0, example3},
      {4, "taylor loss chain", 120.0, chain},
      {5, "three-dots margin ordering", 120.0, three_dots},
      {6, "two-circle failure and fix", 300.0, two_circle},
      {7, "gauss9 MI exclusion", 0.0, gauss9},
      {8, "FGSM robustness direction", 0.0, fgsm_pair},
      {9, "property suites", 60.0, property_suites},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.limit_seconds <= 0.0 || secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("criterion %d %s: %s (%.2f s%s) %s\n", c.id, c.name, pass ? "PASS" : "FAIL", secs,
                in_time ? "" : ", over time limit", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
