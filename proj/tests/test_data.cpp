#include "genlabel/data.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace genlabel;

TEST_CASE("synthetic generators: shapes and one-hot labels") {
  for (const auto& name : synthetic_names()) {
    const Dataset ds = make_synthetic(name, 7, std::nullopt, 3);
    CAPTURE(name);
    CHECK_NOTHROW(ds.validate());
    CHECK(ds.size() > 0);
    CHECK((ds.labels.rowwise().sum().array() == 1.0).all());
  }
  CHECK(make_synthetic("gauss9", 10, std::nullopt, 0).size() == 90);
  CHECK(make_synthetic("two-circle", 10, std::nullopt, 0).size() == 20);
  CHECK(make_synthetic("cube3d", 4, std::nullopt, 0).class_count == 8);
  CHECK(make_synthetic("n-plus-2-dots", 10, std::nullopt, 0).size() == 12);

  const Dataset dots = make_synthetic("three-dots", 1, std::nullopt, 0);
  CHECK(dots.size() == 3);
  CHECK(dots.features.cwiseAbs().maxCoeff() == 5.0);
}

TEST_CASE("synthetic generators are seed-deterministic") {
  const Dataset a = make_synthetic("moon", 20, std::nullopt, 11);
  const Dataset b = make_synthetic("moon", 20, std::nullopt, 11);
  const Dataset c = make_synthetic("moon", 20, std::nullopt, 12);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(a.features != c.features);
}

TEST_CASE("synthetic generators reject bad input") {
  CHECK_THROWS_AS(make_synthetic("spiral", 10, std::nullopt, 0), ConfigError);
  CHECK_THROWS_AS(make_synthetic("circle", 0, std::nullopt, 0), ConfigError);
  CHECK_THROWS_AS(make_synthetic("gauss9", 5, -1.0, 0), ConfigError);
}

TEST_CASE("csv round trip keeps features and class names") {
  const Dataset ds = make_synthetic("gauss9", 4, std::nullopt, 5);
  const std::string text = to_csv(ds);
  CHECK(text.substr(0, text.find('\n')).ends_with(",label"));
  const auto back = parse_csv(text, "label");
  CHECK(back.data.size() == ds.size());
  CHECK(back.data.class_count == ds.class_count);
  CHECK((back.data.features - ds.features).cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    CHECK(back.data.class_names[back.data.label_of(i)] == ds.class_names[ds.label_of(i)]);
}

TEST_CASE("csv errors") {
  CHECK_THROWS_AS(parse_csv(""), DataError);
  CHECK_THROWS_AS(parse_csv("a,label\n1,x\n2\n"), DataError);
  CHECK_THROWS_AS(parse_csv("a,label\n1,x\nfoo,y\n"), DataError);
  CHECK_THROWS_AS(parse_csv("a,label\n1,x\n2,x\n"), DataError);
  CHECK_THROWS_AS(parse_csv("a,b\n1,x\n2,y\n", "label"), DataError);
  CHECK_THROWS_AS(parse_csv("a,label\n,x\n2,y\n"), DataError);

  const auto named = parse_csv("label,a\ny,1\nx,2\n", "label");
  CHECK(named.data.dim() == 1);
  CHECK(named.data.class_names == std::vector<std::string>{"y", "x"});
}

TEST_CASE("folds partition the rows and stratify when possible") {
  const Dataset ds = make_synthetic("gauss9", 12, std::nullopt, 1);
  const FoldAssignment f = fold_indices(ds, 6, 9);
  CHECK(f.stratified);
  std::vector<Eigen::Index> all;
  for (const auto& fold : f.folds) {
    all.insert(all.end(), fold.begin(), fold.end());
    const Dataset sub = subset(ds, fold);
    for (auto n : sub.class_counts()) CHECK(n == 2);
  }
  std::sort(all.begin(), all.end());
  CHECK(all.size() == static_cast<size_t>(ds.size()));
  CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());

  auto [tr, va] = fold_split(f, 2);
  CHECK(tr.size() + va.size() == all.size());

  const Dataset dots = make_synthetic("three-dots", 1, std::nullopt, 0);
  CHECK_FALSE(fold_indices(dots, 3, 0).stratified);
}

TEST_CASE("split is deterministic and disjoint") {
  const Dataset ds = make_synthetic("circle", 30, std::nullopt, 2);
  SplitSpec spec;
  spec.seed = 4;
  const SplitResult a = split(ds, spec), b = split(ds, spec);
  CHECK(a.train_rows == b.train_rows);
  std::set<Eigen::Index> tr(a.train_rows.begin(), a.train_rows.end());
  for (auto r : a.test_rows) CHECK(tr.count(r) == 0);
  CHECK(a.train.size() + a.test.size() == ds.size());
}

TEST_CASE("min-max scaler maps the fit set into the unit box") {
  const Dataset ds = make_synthetic("moon", 25, std::nullopt, 0);
  const MinMaxScaler s = MinMaxScaler::fit(ds);
  const Dataset t = s.apply(ds);
  CHECK(t.features.minCoeff() == doctest::Approx(0.0));
  CHECK(t.features.maxCoeff() == doctest::Approx(1.0));
}
