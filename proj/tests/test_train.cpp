#include "genlabel/train.hpp"

#include <doctest.h>

#include <algorithm>

using namespace genlabel;

namespace {

TrainConfig small_config(Method m) {
  TrainConfig c;
  c.method = m;
  c.hidden = {8, 8};
  c.epochs = 15;
  c.batch_size = 16;
  c.mix.gamma = 1.0;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("every method is deterministic under a fixed seed") {
  const Dataset ds = make_synthetic("moon", 40, std::nullopt, 1);
  for (Method m : {Method::vanilla, Method::mixup, Method::mixup_no_mi, Method::genlabel_input,
                   Method::genlabel_latent, Method::gen_classifier}) {
    CAPTURE(to_string(m));
    const TrainConfig c = small_config(m);
    const TrainResult a = train(c, ds), b = train(c, ds);
    CHECK(to_json(a).dump() == to_json(b).dump());
    if (a.classifier) {
      CHECK(to_json(*a.classifier).dump() == to_json(*b.classifier).dump());
      TrainConfig other = c;
      other.seed = 6;
      CHECK(to_json(*train(other, ds).classifier).dump() != to_json(*a.classifier).dump());
    } else {
      CHECK(to_json(*a.generative).dump() == to_json(*b.generative).dump());
    }
  }
}

TEST_CASE("parallel cross-validation matches the serial run") {
  const Dataset ds = make_synthetic("moon", 24, std::nullopt, 2);
  TrainConfig c = small_config(Method::genlabel_input);
  c.epochs = 4;
  c.gamma_grid = {1.0, 0.0, 0.5};
  c.fold_count = 3;
  const CVReport serial = cross_validate(c, ds);
  c.jobs = 3;
  const CVReport par = cross_validate(c, ds);
  CHECK(to_json(serial).dump() == to_json(par).dump());
  CHECK(serial.gamma_grid == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(serial.runs == 2 * 3 * 3);
  CHECK(serial.accuracy.size() == 2);
  CHECK(serial.accuracy[0][0].size() == 3);
}

TEST_CASE("training history and selection") {
  const Dataset ds = make_synthetic("circle", 30, std::nullopt, 0);
  const Dataset val = make_synthetic("circle", 30, std::nullopt, 1);
  TrainConfig c = small_config(Method::vanilla);
  c.selection = Selection::clean;
  const TrainResult r = train(c, ds, &val);
  CHECK(r.history.size() == 15);
  CHECK(r.selected_epoch >= 0);
  CHECK(r.selected_epoch < 15);
  for (const auto& e : r.history) CHECK(e.val_clean.has_value());
  CHECK(r.history.back().lr == doctest::Approx(0.1 * 0.01));

  c.selection = Selection::robust;
  c.robust_every = 5;
  const TrainResult rr = train(c, ds, &val);
  int measured = 0;
  for (const auto& e : rr.history) measured += e.val_robust.has_value();
  CHECK(measured == 3);
  // Without a validation set the last epoch is kept.
  CHECK(train(c, ds).selected_epoch == 14);
}

TEST_CASE("mixup counts intrusions and the no-MI variant removes them") {
  const Dataset ds = make_synthetic("gauss9", 10, std::nullopt, 3);
  TrainConfig c = small_config(Method::mixup);
  c.epochs = 3;
  const TrainResult mix = train(c, ds);
  CHECK(mix.mixes > 0);
  CHECK(mix.mi_flagged > 0);
  c.method = Method::mixup_no_mi;
  const TrainResult nomi = train(c, ds);
  CHECK(nomi.mi_flagged > 0);
  CHECK(nomi.mixes > nomi.mi_flagged);
}

TEST_CASE("config json round trip and validation") {
  TrainConfig c = small_config(Method::genlabel_input);
  c.gen_kind = GenKind::kde;
  c.kde.bandwidth = 0.3;
  c.opt.kind = OptimizerKind::adam;
  c.mix.labeling = Labeling::blend;
  const TrainConfig back = train_config_from_json(to_json(c));
  CHECK(to_json(back).dump() == to_json(c).dump());

  CHECK_THROWS_AS(train_config_from_json(Json{{"method", "cutmix"}}), ConfigError);
  TrainConfig bad = c;
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.gamma_grid = {1.5};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.method = Method::genlabel_latent;
  bad.model_kind = ModelKind::logreg;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("generative classifier reports its training accuracy") {
  const Dataset ds = make_synthetic("gauss9", 20, std::nullopt, 4);
  TrainConfig c = small_config(Method::gen_classifier);
  const TrainResult r = train(c, ds);
  REQUIRE(r.generative);
  CHECK_FALSE(r.classifier);
  CHECK(*r.generative_train_accuracy == 1.0);
  CHECK(result_accuracy(r, ds) == 1.0);
  c.gen_kind = GenKind::cv;
  CHECK_THROWS_AS(train(c, ds), ConfigError);
}

TEST_CASE("genlabel labeling is the gamma = 1 blend; gamma 0 warns") {
  const Dataset ds = make_synthetic("moon", 20, std::nullopt, 7);
  TrainConfig a = small_config(Method::genlabel_input);
  a.epochs = 3;
  a.mix.labeling = Labeling::genlabel;
  a.mix.gamma = 0.0;
  TrainConfig b = a;
  b.mix.labeling = Labeling::blend;
  b.mix.gamma = 1.0;
  CHECK(to_json(*train(a, ds).classifier).dump() == to_json(*train(b, ds).classifier).dump());

  b.mix.gamma = 0.0;
  const TrainResult r = train(b, ds);
  CHECK(std::count(r.warnings.begin(), r.warnings.end(), "gamma is 0: targets are plain mixup labels") == 1);
  TrainConfig m = b;
  m.method = Method::mixup;
  CHECK(to_json(*r.classifier).dump() == to_json(*train(m, ds).classifier).dump());
}
