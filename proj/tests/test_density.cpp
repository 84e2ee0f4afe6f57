#include "genlabel/density.hpp"
#include "genlabel/data.hpp"
#include "genlabel/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace genlabel;

namespace {

// Two 1-D classes with unit-free variance s2, class 0 at mu0 and class 1 at mu1.
GaussianModel<double> line_gm(double mu0, double mu1, double s2) {
  GaussianModel<double> m;
  for (double mu : {mu0, mu1}) {
    m.means.push_back(VectorXd::Constant(1, mu));
    m.covariances.push_back(MatrixXd::Constant(1, 1, s2));
    m.priors.push_back(0.5);
    m.eps_reg.push_back(0.0);
  }
  m.factorize();
  return m;
}

}  // namespace

TEST_CASE("gaussian log density matches the closed form") {
  const auto m = line_gm(0.0, 3.0, 0.25);
  const double x = 0.7;
  const double expect = -0.5 * std::log(2 * std::numbers::pi * 0.25) - x * x / (2 * 0.25);
  CHECK(m.log_likelihood(VectorXd::Constant(1, x), 0) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("genlabel on a 1-D pair is the logistic curve in lambda") {
  for (double sigma : {0.05, 0.1, 0.2}) {
    const GenerativeModel gm = line_gm(1.0, 0.0, sigma * sigma);
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double lam = i / 1000.0;
      const auto g = genlabel::genlabel(gm, VectorXd::Constant(1, lam));
      const double expect = 1.0 / (1.0 + std::exp(-(lam - 0.5) / (sigma * sigma)));
      worst = std::max(worst, std::abs(g[0] - expect));
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("genlabel outputs lie on the simplex") {
  const Dataset ds = make_synthetic("gauss9", 15, std::nullopt, 2);
  GenerativeModel gm = fit_gm(ds);
  GenerativeModel kde = fit_kde(ds);
  Rng rng(5);
  std::uniform_real_distribution<double> u(-40.0, 40.0);
  for (int t = 0; t < 200; ++t) {
    VectorXd x(2);
    x << u(rng), u(rng);
    for (const auto* model : {&gm, &kde})
      for (bool post : {false, true}) {
        const auto g = genlabel::genlabel(*model, x, post);
        CHECK(g.size() == 9);
        CHECK((g.probs.array() >= 0.0).all());
        CHECK(g.probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
      }
  }
}

TEST_CASE("gm fit recovers class moments") {
  const Dataset ds = make_synthetic("gauss9", 400, 0.5, 8);
  const auto gm = fit_gm(ds);
  CHECK(gm.class_count() == 9);
  CHECK(gm.means[4].norm() < 0.15);
  CHECK(gm.covariances[4](0, 0) == doctest::Approx(0.5).epsilon(0.2));
  CHECK(gm.eps_reg[4] > 0.0);
  for (double p : gm.priors) CHECK(p == doctest::Approx(1.0 / 9.0));
}

TEST_CASE("gm regularizer keeps a singular class usable") {
  const Dataset dots = make_synthetic("three-dots", 1, std::nullopt, 0);
  const auto gm = fit_gm(dots);
  for (double e : gm.eps_reg) CHECK(e == doctest::Approx(1e-6));
  CHECK(std::isfinite(gm.log_likelihood(VectorXd::Zero(2), 0)));
  CHECK_THROWS_AS(fit_gm(dots, GmOptions{-1.0}), ConfigError);
}

TEST_CASE("1-D kde integrates to one") {
  const Dataset ds = make_dataset((MatrixXd(6, 1) << 0.0, 0.3, 1.2, 4.0, 4.5, 5.5).finished(),
                                  {0, 0, 0, 1, 1, 1}, 2);
  const auto kde = fit_kde(ds);
  for (int c = 0; c < 2; ++c) {
    double total = 0.0;
    const double lo = -20.0, hi = 25.0;
    const int n = 20000;
    const double h = (hi - lo) / n;
    for (int i = 0; i < n; ++i)
      total += std::exp(kde.log_likelihood(VectorXd::Constant(1, lo + (i + 0.5) * h), c)) * h;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("kde falls back to identity kernels on singular classes") {
  const Dataset dots = make_synthetic("three-dots", 1, std::nullopt, 0);
  const auto kde = fit_kde(dots);
  CHECK(kde.warnings.size() == 3);
  CHECK(kde.kernel_cov[0].isIdentity());
  CHECK_THROWS_AS(fit_kde(dots, KdeOptions{0.0, false}), ConfigError);
}

TEST_CASE("generative models survive json") {
  const Dataset ds = make_synthetic("moon", 30, std::nullopt, 3);
  for (const GenerativeModel& m : {GenerativeModel(fit_gm(ds)), GenerativeModel(fit_kde(ds))}) {
    const GenerativeModel back = generative_model_from_json(to_json(m));
    CHECK(kind_name(back) == kind_name(m));
    VectorXd x(2);
    x << 0.3, -0.2;
    CHECK((log_likelihoods(back, x) - log_likelihoods(m, x)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("generative classifier separates gauss9") {
  const Dataset ds = make_synthetic("gauss9", 30, std::nullopt, 1);
  CHECK(generative_classifier_accuracy(fit_gm(ds), ds) == 1.0);
  CHECK(generative_classifier_accuracy(fit_kde(ds), ds) == 1.0);
}
