#include "genlabel/eval.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace genlabel;

namespace {

// Nearest-centroid rule as a linear model: logit_c = p_c . x - |p_c|^2 / 2.
SoftmaxRegression<double> voronoi(const Dataset& ds) {
  SoftmaxRegression<double> m;
  m.W = ds.features;
  m.b = -0.5 * ds.features.rowwise().squaredNorm();
  return m;
}

double ce(const Classifier& c, const MatrixXd& x, const MatrixXd& y) {
  const MatrixXd z = logits(c, x);
  double total = 0.0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const VectorXd zr = z.row(r).transpose();
    total += log_sum_exp(zr) - zr.dot(y.row(r).transpose());
  }
  return total;
}

}  // namespace

TEST_CASE("fgsm stays inside the epsilon ball") {
  Rng rng(3);
  const Dataset ds = make_synthetic("moon", 40, std::nullopt, 0);
  const Classifier models[] = {make_softmax_regression(2, 2, true, rng),
                               make_mlp(2, {16, 16}, 2, true, rng)};
  for (const auto& m : models)
    for (double eps : {0.05, 0.2}) {
      AttackConfig cfg;
      cfg.epsilon = eps;
      const MatrixXd adv = fgsm(m, ds.features, ds.labels, cfg);
      const MatrixXd diff = adv - ds.features;
      CHECK(diff.cwiseAbs().maxCoeff() <= eps + 1e-15);
      // Every coordinate with a non-zero gradient moves by exactly epsilon.
      const MatrixXd g = input_gradient(m, ds.features, ds.labels);
      for (Eigen::Index i = 0; i < g.size(); ++i)
        if (g.data()[i] != 0.0) CHECK(std::abs(diff.data()[i]) == doctest::Approx(eps));
      CHECK(ce(m, adv, ds.labels) >= ce(m, ds.features, ds.labels));

      cfg.norm = AttackNorm::l2;
      const MatrixXd adv2 = fgsm(m, ds.features, ds.labels, cfg);
      CHECK(((adv2 - ds.features).rowwise().norm().array() <= eps + 1e-12).all());
    }
}

TEST_CASE("fgsm with zero epsilon is the identity, negative is rejected") {
  Rng rng(1);
  const Classifier m = make_softmax_regression(2, 3, true, rng);
  const MatrixXd x = MatrixXd::Random(4, 2);
  const MatrixXd y = MatrixXd::Identity(4, 3);
  AttackConfig cfg;
  cfg.epsilon = 0.0;
  CHECK(fgsm(m, x, y, cfg) == x);
  cfg.epsilon = -0.1;
  CHECK_THROWS_AS(fgsm(m, x, y, cfg), ConfigError);
}

TEST_CASE("robust accuracy never exceeds clean accuracy for a linear model") {
  const Dataset ds = make_synthetic("circle", 50, 0.3, 2);
  Rng rng(2);
  const Classifier m = make_softmax_regression(2, 2, true, rng);
  AttackConfig cfg;
  CHECK(robust_accuracy(m, ds, cfg) <= accuracy(m, ds));
}

TEST_CASE("three-dots max-margin rule has margin 5 to within a grid cell") {
  const Dataset dots = make_synthetic("three-dots", 1, std::nullopt, 0);
  const Classifier m = voronoi(dots);
  CHECK(accuracy(m, dots) == 1.0);
  for (int res : {100, 400}) {
    const GridSpec grid{-10, 10, -10, 10, res};
    const MarginResult r = multiclass_margin(m, dots, grid);
    CHECK_FALSE(r.misclassified);
    CHECK(r.cell_size == doctest::Approx(20.0 / res));
    CHECK(std::abs(r.margin - 5.0) <= r.cell_size);
  }
}

TEST_CASE("margin is zero and flagged when a point is misclassified") {
  const Dataset dots = make_synthetic("three-dots", 1, std::nullopt, 0);
  SoftmaxRegression<double> m = voronoi(dots);
  m.b[0] -= 1000.0;
  const MarginResult r = multiclass_margin(Classifier(m), dots, GridSpec{-10, 10, -10, 10, 50});
  CHECK(r.misclassified);
  CHECK(r.margin == 0.0);
}

TEST_CASE("binary linear margin") {
  const Dataset ds = make_dataset((MatrixXd(3, 2) << 2, 0, 1, 1, -3, 0).finished(), {0, 0, 1}, 2);
  VectorXd theta(2);
  theta << 1.0, 0.0;
  CHECK(binary_linear_margin(theta, ds) == doctest::Approx(1.0));
  CHECK(binary_linear_margin(5.0 * theta, ds) == doctest::Approx(1.0));
  CHECK(binary_linear_margin(-theta, ds) == doctest::Approx(-3.0));
}

TEST_CASE("boundary grid layout") {
  const Dataset dots = make_synthetic("three-dots", 1, std::nullopt, 0);
  const GridSpec grid{-1, 1, -2, 2, 4};
  const BoundaryGrid g = boundary_grid(Classifier(voronoi(dots)), grid);
  CHECK(g.points.rows() == 16);
  CHECK(g.points(0, 0) == doctest::Approx(-0.75));
  CHECK(g.points(0, 1) == doctest::Approx(-1.5));
  CHECK(g.points(1, 0) == doctest::Approx(-0.25));
  CHECK((g.probs.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  const std::string csv = boundary_to_csv(g);
  CHECK(csv.substr(0, csv.find('\n')) == "x0,x1,class,p0,p1,p2");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);
  CHECK_THROWS_AS((GridSpec{1, -1, 0, 1, 10}.validate()), ConfigError);
}
