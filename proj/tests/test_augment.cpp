#include "genlabel/augment.hpp"
#include "genlabel/density.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace genlabel;

TEST_CASE("lambda draws stay in [0, 1] with the Beta mean and variance") {
  Rng rng(1);
  for (double a : {0.2, 1.0, 2.0}) {
    double s = 0.0, s2 = 0.0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
      const double l = sample_lambda(a, rng);
      REQUIRE(l >= 0.0);
      REQUIRE(l <= 1.0);
      s += l;
      s2 += l * l;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    CHECK(mean == doctest::Approx(0.5).epsilon(0.02));
    CHECK(var == doctest::Approx(1.0 / (4.0 * (2.0 * a + 1.0))).epsilon(0.05));
  }
  CHECK_THROWS_AS(sample_lambda(0.0, rng), ConfigError);
}

TEST_CASE("mix_pair is an exact convex combination") {
  VectorXd xi(3), xj(3), yi = VectorXd::Unit(2, 0), yj = VectorXd::Unit(2, 1);
  xi << 1.0, -2.0, 0.5;
  xj << -3.0, 4.0, 0.25;
  for (double lam : {0.0, 0.25, 0.5, 1.0}) {
    auto [x, y] = mix_pair(xi, yi, xj, yj, lam);
    CHECK(x == lam * xi + (1.0 - lam) * xj);
    CHECK(y[0] == lam);
    CHECK(y.sum() == doctest::Approx(1.0));
  }
}

TEST_CASE("logistic weight is symmetric and sharpens as sigma shrinks") {
  CHECK(logistic_weight(0.5, 0.1) == doctest::Approx(0.5));
  CHECK(logistic_weight(0.3, 0.2) + logistic_weight(0.7, 0.2) == doctest::Approx(1.0));
  CHECK(logistic_weight(0.6, 0.05) > logistic_weight(0.6, 0.3));
  const auto lab = logistic_label(VectorXd::Unit(3, 0), VectorXd::Unit(3, 2), 0.7, 0.2);
  CHECK(lab.probs.sum() == doctest::Approx(1.0));
  CHECK(lab[1] == 0.0);
}

TEST_CASE("intrusion flag on the gauss9 middle row") {
  const Dataset ds = make_synthetic("gauss9", 20, 0.01, 0);
  const NnIndex nn(ds);
  // Classes 1 and 7 sit at (-10, 0) and (10, 0); their midpoint is class 4's centre.
  VectorXd mid = VectorXd::Zero(2);
  CHECK(detect_mi(mid, 1, 7, nn));
  CHECK_FALSE(detect_mi(mid, 4, 7, nn));
  CHECK(detect_mi(mid, 1, 7, ds) == detect_mi(mid, 1, 7, nn));
}

TEST_CASE("batches: convex mixes, simplex labels, intrusion accounting") {
  const Dataset ds = make_synthetic("gauss9", 20, std::nullopt, 4);
  const GenerativeModel gm = fit_gm(ds);
  const NnIndex nn(ds);
  BatchSources src;
  src.model = &gm;
  src.nn = &nn;

  for (Labeling lab : {Labeling::linear, Labeling::logistic, Labeling::genlabel, Labeling::blend}) {
    MixConfig cfg;
    cfg.labeling = lab;
    cfg.gamma = 0.4;
    Rng rng(7);
    const Batch b = make_batch(ds, src, cfg, 256, rng);
    CHECK(b.samples.size() == 256);
    CHECK(b.attempts == 256);
    CHECK(b.mi_flagged > 0);
    for (const auto& s : b.samples) {
      const VectorXd xi = ds.features.row(s.source_i).transpose();
      const VectorXd xj = ds.features.row(s.source_j).transpose();
      CHECK((s.x_mix - (s.lambda * xi + (1.0 - s.lambda) * xj)).cwiseAbs().maxCoeff() == 0.0);
      CHECK((s.label.probs.array() >= 0.0).all());
      CHECK(s.label.probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  MixConfig excl;
  excl.exclude_mi = true;
  Rng rng(7);
  const Batch b = make_batch(ds, src, excl, 256, rng);
  CHECK(b.samples.size() == 256);
  CHECK(b.attempts == 256 + b.mi_flagged);
  for (const auto& s : b.samples) CHECK_FALSE(s.mi_flag);

  excl.mi_mode = MiMode::drop;
  Rng rng2(7);
  const Batch d = make_batch(ds, src, excl, 256, rng2);
  CHECK(d.attempts == 256);
  CHECK(d.samples.size() == 256 - d.mi_flagged);
}

TEST_CASE("batch generation is seed-deterministic") {
  const Dataset ds = make_synthetic("moon", 30, std::nullopt, 0);
  MixConfig cfg;
  Rng a(3), b(3);
  const Batch x = make_batch(ds, {}, cfg, 32, a), y = make_batch(ds, {}, cfg, 32, b);
  CHECK(batch_to_csv(x) == batch_to_csv(y));
  const std::string csv = batch_to_csv(x);
  CHECK(csv.substr(0, csv.find('\n')) == "x0,x1,lambda,source_i,source_j,mi,p0,p1");
}

TEST_CASE("blend at gamma 0 and 1 reduces to its endpoints") {
  const Dataset ds = make_synthetic("gauss9", 10, std::nullopt, 1);
  const GenerativeModel gm = fit_gm(ds);
  BatchSources src;
  src.model = &gm;
  VectorXd x(2);
  x << 0.0, -5.0;
  const VectorXd yi = VectorXd::Unit(9, 0), yj = VectorXd::Unit(9, 2);
  const VectorXd lin = 0.5 * yi + 0.5 * yj;
  MixConfig cfg;
  cfg.labeling = Labeling::blend;
  cfg.gamma = 0.0;
  CHECK((relabel(x, lin, yi, yj, 0.5, src, cfg).probs - lin).norm() == 0.0);
  cfg.gamma = 1.0;
  const VectorXd gen = genlabel::genlabel(gm, x).probs;
  CHECK((relabel(x, lin, yi, yj, 0.5, src, cfg).probs - gen).norm() < 1e-15);
  CHECK_THROWS_AS(relabel(x, lin, yi, yj, 0.5, BatchSources{}, cfg), ConfigError);
}
