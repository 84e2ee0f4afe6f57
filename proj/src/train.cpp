#include "genlabel/train.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace genlabel {

namespace {

template <typename E>
struct NamedEnum {
  E value;
  const char* name;
};

constexpr NamedEnum<Method> kMethods[] = {{Method::vanilla, "vanilla"},
                                          {Method::mixup, "mixup"},
                                          {Method::mixup_no_mi, "mixup_no_mi"},
                                          {Method::genlabel_input, "genlabel_input"},
                                          {Method::genlabel_latent, "genlabel_latent"},
                                          {Method::gen_classifier, "gen_classifier"}};
constexpr NamedEnum<ModelKind> kModelKinds[] = {{ModelKind::logreg, "logreg"},
                                                {ModelKind::mlp2, "mlp2"}};
constexpr NamedEnum<GenKind> kGenKinds[] = {
    {GenKind::gm, "gm"}, {GenKind::kde, "kde"}, {GenKind::cv, "cv"}};
constexpr NamedEnum<Selection> kSelections[] = {
    {Selection::last, "last"}, {Selection::clean, "clean"}, {Selection::robust, "robust"}};

template <typename E, size_t N>
E parse_named(const NamedEnum<E> (&table)[N], const std::string& s, const char* what) {
  for (const auto& e : table)
    if (s == e.name) return e.value;
  throw ConfigError(std::string("unknown ") + what + " '" + s + "'");
}

template <typename E, size_t N>
std::string name_of(const NamedEnum<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

}  // namespace

Method parse_method(const std::string& s) { return parse_named(kMethods, s, "method"); }
std::string to_string(Method m) { return name_of(kMethods, m); }
ModelKind parse_model_kind(const std::string& s) { return parse_named(kModelKinds, s, "model kind"); }
std::string to_string(ModelKind m) { return name_of(kModelKinds, m); }
GenKind parse_gen_kind(const std::string& s) { return parse_named(kGenKinds, s, "generative kind"); }
std::string to_string(GenKind g) { return name_of(kGenKinds, g); }
Selection parse_selection(const std::string& s) { return parse_named(kSelections, s, "selection"); }
std::string to_string(Selection s) { return name_of(kSelections, s); }

void TrainConfig::validate() const {
  mix.validate();
  opt.validate();
  attack.validate();
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (robust_every < 1) throw ConfigError("robust_every must be >= 1");
  if (fold_count < 2) throw ConfigError("fold_count must be >= 2");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (gamma_grid.empty()) throw ConfigError("gamma_grid is empty");
  for (double g : gamma_grid)
    if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("gamma_grid entries must lie in [0, 1]");
  for (int h : hidden)
    if (h < 1) throw ConfigError("hidden sizes must be positive");
  if (model_kind == ModelKind::mlp2 && hidden.empty())
    throw ConfigError("mlp2 needs at least one hidden layer");
  if (method == Method::genlabel_latent && model_kind != ModelKind::mlp2)
    throw ConfigError("genlabel_latent needs model_kind mlp2");
  if (kde.bandwidth && !(*kde.bandwidth > 0.0)) throw ConfigError("KDE bandwidth must be > 0");
  if (gm.eps_reg && *gm.eps_reg < 0.0) throw ConfigError("eps_reg must be >= 0");
}

// ---------------------------------------------------------------------------
// Config JSON

Json to_json(const TrainConfig& c) {
  Json j;
  j["method"] = to_string(c.method);
  j["model_kind"] = to_string(c.model_kind);
  j["hidden"] = c.hidden;
  j["use_bias"] = c.use_bias;
  j["loss"] = c.loss == LossKind::cross_entropy ? "ce" : "mse";
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  Json mix;
  mix["alpha"] = c.mix.alpha;
  mix["gamma"] = c.mix.gamma;
  mix["labeling"] = to_string(c.mix.labeling);
  mix["logistic_sigma"] = c.mix.logistic_sigma;
  mix["exclude_mi"] = c.mix.exclude_mi;
  mix["mi_mode"] = c.mix.mi_mode == MiMode::redraw ? "redraw" : "drop";
  mix["same_class_policy"] = c.mix.same_class_policy == SameClassPolicy::mix ? "mix" : "skip";
  mix["posterior"] = c.mix.posterior;
  j["mix"] = mix;
  Json opt;
  opt["kind"] = to_string(c.opt.kind);
  opt["learning_rate"] = c.opt.learning_rate;
  opt["momentum"] = c.opt.momentum;
  opt["beta1"] = c.opt.beta1;
  opt["beta2"] = c.opt.beta2;
  opt["eps"] = c.opt.eps;
  opt["weight_decay"] = c.opt.weight_decay;
  opt["milestones"] = c.opt.milestones;
  opt["decay_factor"] = c.opt.decay_factor;
  j["optimizer"] = opt;
  j["gen_kind"] = to_string(c.gen_kind);
  if (c.gm.eps_reg) j["gm_eps_reg"] = *c.gm.eps_reg;
  if (c.kde.bandwidth) j["kde_bandwidth"] = *c.kde.bandwidth;
  j["kde_diagonal"] = c.kde.diagonal;
  j["selection"] = to_string(c.selection);
  j["attack_epsilon"] = c.attack.epsilon;
  j["attack_norm"] = c.attack.norm == AttackNorm::linf ? "linf" : "l2";
  j["robust_every"] = c.robust_every;
  j["gamma_grid"] = c.gamma_grid;
  j["fold_count"] = c.fold_count;
  j["jobs"] = c.jobs;
  return j;
}

TrainConfig train_config_from_json(const Json& j, TrainConfig c) {
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (j.contains("method")) c.method = parse_method(j["method"].get<std::string>());
    if (j.contains("model_kind")) c.model_kind = parse_model_kind(j["model_kind"].get<std::string>());
    if (j.contains("hidden")) c.hidden = j["hidden"].get<std::vector<int>>();
    if (j.contains("use_bias")) c.use_bias = j["use_bias"].get<bool>();
    if (j.contains("loss")) {
      const auto s = j["loss"].get<std::string>();
      if (s == "ce") c.loss = LossKind::cross_entropy;
      else if (s == "mse") c.loss = LossKind::mse;
      else throw ConfigError("unknown loss '" + s + "'");
    }
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("mix")) {
      const Json& m = j["mix"];
      if (m.contains("alpha")) c.mix.alpha = m["alpha"].get<double>();
      if (m.contains("gamma")) c.mix.gamma = m["gamma"].get<double>();
      if (m.contains("labeling")) c.mix.labeling = parse_labeling(m["labeling"].get<std::string>());
      if (m.contains("logistic_sigma")) c.mix.logistic_sigma = m["logistic_sigma"].get<double>();
      if (m.contains("exclude_mi")) c.mix.exclude_mi = m["exclude_mi"].get<bool>();
      if (m.contains("mi_mode")) {
        const auto s = m["mi_mode"].get<std::string>();
        if (s == "redraw") c.mix.mi_mode = MiMode::redraw;
        else if (s == "drop") c.mix.mi_mode = MiMode::drop;
        else throw ConfigError("unknown mi_mode '" + s + "'");
      }
      if (m.contains("same_class_policy")) {
        const auto s = m["same_class_policy"].get<std::string>();
        if (s == "mix") c.mix.same_class_policy = SameClassPolicy::mix;
        else if (s == "skip") c.mix.same_class_policy = SameClassPolicy::skip;
        else throw ConfigError("unknown same_class_policy '" + s + "'");
      }
      if (m.contains("posterior")) c.mix.posterior = m["posterior"].get<bool>();
    }
    if (j.contains("optimizer")) {
      const Json& o = j["optimizer"];
      if (o.contains("kind")) c.opt.kind = parse_optimizer(o["kind"].get<std::string>());
      if (o.contains("learning_rate")) c.opt.learning_rate = o["learning_rate"].get<double>();
      if (o.contains("momentum")) c.opt.momentum = o["momentum"].get<double>();
      if (o.contains("beta1")) c.opt.beta1 = o["beta1"].get<double>();
      if (o.contains("beta2")) c.opt.beta2 = o["beta2"].get<double>();
      if (o.contains("eps")) c.opt.eps = o["eps"].get<double>();
      if (o.contains("weight_decay")) c.opt.weight_decay = o["weight_decay"].get<double>();
      if (o.contains("milestones")) c.opt.milestones = o["milestones"].get<std::vector<double>>();
      if (o.contains("decay_factor")) c.opt.decay_factor = o["decay_factor"].get<double>();
    }
    if (j.contains("gen_kind")) c.gen_kind = parse_gen_kind(j["gen_kind"].get<std::string>());
    if (j.contains("gm_eps_reg")) c.gm.eps_reg = j["gm_eps_reg"].get<double>();
    if (j.contains("kde_bandwidth")) c.kde.bandwidth = j["kde_bandwidth"].get<double>();
    if (j.contains("kde_diagonal")) c.kde.diagonal = j["kde_diagonal"].get<bool>();
    if (j.contains("selection")) c.selection = parse_selection(j["selection"].get<std::string>());
    if (j.contains("attack_epsilon")) c.attack.epsilon = j["attack_epsilon"].get<double>();
    if (j.contains("attack_norm")) {
      const auto s = j["attack_norm"].get<std::string>();
      if (s == "linf") c.attack.norm = AttackNorm::linf;
      else if (s == "l2") c.attack.norm = AttackNorm::l2;
      else throw ConfigError("unknown attack_norm '" + s + "'");
    }
    if (j.contains("robust_every")) c.robust_every = j["robust_every"].get<int>();
    if (j.contains("gamma_grid")) c.gamma_grid = j["gamma_grid"].get<std::vector<double>>();
    if (j.contains("fold_count")) c.fold_count = j["fold_count"].get<int>();
    if (j.contains("jobs")) c.jobs = j["jobs"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

Json to_json(const CVReport& r) {
  Json j;
  j["gamma_grid"] = r.gamma_grid;
  j["kinds"] = r.kinds;
  j["fold_accuracy"] = r.accuracy;
  j["mean_accuracy"] = r.mean_accuracy;
  j["selected_gamma"] = r.selected_gamma;
  j["selected_gen_kind"] = r.selected_kind;
  j["runs"] = r.runs;
  j["stratified"] = r.stratified;
  j["warnings"] = r.warnings;
  return j;
}

Json to_json(const TrainResult& r) {
  Json j;
  Json hist = Json::array();
  for (const auto& e : r.history) {
    Json h;
    h["epoch"] = e.epoch;
    h["lr"] = e.lr;
    h["loss"] = e.loss;
    if (e.val_clean) h["val_clean_accuracy"] = *e.val_clean;
    if (e.val_robust) h["val_robust_accuracy"] = *e.val_robust;
    hist.push_back(std::move(h));
  }
  j["history"] = std::move(hist);
  j["selected_epoch"] = r.selected_epoch;
  if (r.generative_train_accuracy) j["generative_train_accuracy"] = *r.generative_train_accuracy;
  j["mixes"] = r.mixes;
  j["mi_flagged"] = r.mi_flagged;
  if (r.cv) j["cv"] = to_json(*r.cv);
  j["warnings"] = r.warnings;
  return j;
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

using EpochBatches = std::vector<std::pair<MatrixXd, MatrixXd>>;
using BatchProvider = std::function<EpochBatches(Rng&, TrainResult&)>;

Classifier make_classifier(const TrainConfig& cfg, Eigen::Index d, Eigen::Index k, Rng& rng) {
  if (cfg.model_kind == ModelKind::logreg) return make_softmax_regression<double>(d, k, cfg.use_bias, rng);
  return make_mlp<double>(d, cfg.hidden, k, cfg.use_bias, rng);
}

template <typename Model>
void run_loop(const TrainConfig& cfg, Model& model, const BatchProvider& provider,
              const Dataset* validation, TrainResult& result) {
  Optimizer opt(cfg.opt);
  Rng batch_rng = make_rng(cfg.seed, "batch");
  const bool select = validation && cfg.selection != Selection::last;
  Model best = model;
  double best_score = -1.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.opt.rate_at(epoch, cfg.epochs);
    const EpochBatches batches = provider(batch_rng, result);
    double loss = 0.0;
    for (const auto& [x, t] : batches) {
      auto bw = backward(model, x, t, cfg.loss);
      if (!std::isfinite(bw.loss))
        throw NumericalError("loss became non-finite at epoch " + std::to_string(epoch));
      opt.step(model, bw.grads, lr);
      loss += bw.loss;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.loss = batches.empty() ? 0.0 : loss / static_cast<double>(batches.size());
    if (select) {
      const Classifier snapshot = model;
      std::optional<double> score;
      if (cfg.selection == Selection::clean) {
        rec.val_clean = accuracy(snapshot, *validation);
        score = rec.val_clean;
      } else if ((epoch + 1) % cfg.robust_every == 0 || epoch + 1 == cfg.epochs) {
        rec.val_robust = robust_accuracy(snapshot, *validation, cfg.attack);
        score = rec.val_robust;
      }
      if (score && *score > best_score) {
        best_score = *score;
        best = model;
        result.selected_epoch = epoch;
      }
    }
    result.history.push_back(rec);
  }
  if (select) {
    result.classifier = best;
  } else {
    result.classifier = model;
    result.selected_epoch = cfg.epochs - 1;
  }
}

void run_training(const TrainConfig& cfg, const Dataset& train_set, const BatchProvider& provider,
                  const Dataset* validation, TrainResult& result) {
  Rng init_rng = make_rng(cfg.seed, "init");
  Classifier model = make_classifier(cfg, train_set.dim(), train_set.class_count, init_rng);
  std::visit([&](auto& m) { run_loop(cfg, m, provider, validation, result); }, model);
}

BatchProvider vanilla_provider(const Dataset& ds, int batch_size) {
  return [&ds, batch_size](Rng& rng, TrainResult&) {
    std::vector<Eigen::Index> order(static_cast<size_t>(ds.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    EpochBatches out;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(batch_size));
      MatrixXd x(static_cast<Eigen::Index>(end - start), ds.dim());
      MatrixXd t(static_cast<Eigen::Index>(end - start), ds.class_count);
      for (size_t r = start; r < end; ++r) {
        x.row(static_cast<Eigen::Index>(r - start)) = ds.features.row(order[r]);
        t.row(static_cast<Eigen::Index>(r - start)) = ds.labels.row(order[r]);
      }
      out.emplace_back(std::move(x), std::move(t));
    }
    return out;
  };
}

BatchProvider mix_provider(const Dataset& ds, const MixConfig& mix, int batch_size,
                           BatchSources sources) {
  const auto steps = static_cast<int>((ds.size() + batch_size - 1) / batch_size);
  return [&ds, mix, batch_size, steps, sources](Rng& rng, TrainResult& result) {
    EpochBatches out;
    for (int s = 0; s < steps; ++s) {
      Batch b = make_batch(ds, sources, mix, batch_size, rng);
      result.mixes += b.attempts;
      result.mi_flagged += b.mi_flagged;
      if (b.samples.empty()) continue;
      MatrixXd x(static_cast<Eigen::Index>(b.samples.size()), ds.dim());
      MatrixXd t(static_cast<Eigen::Index>(b.samples.size()), ds.class_count);
      for (size_t r = 0; r < b.samples.size(); ++r) {
        x.row(static_cast<Eigen::Index>(r)) = b.samples[r].x_mix.transpose();
        t.row(static_cast<Eigen::Index>(r)) = b.samples[r].label.probs.transpose();
      }
      out.emplace_back(std::move(x), std::move(t));
    }
    return out;
  };
}

void admission_check(const GenerativeModel& gen, const Dataset& fit_data, TrainResult& result) {
  const double acc = generative_classifier_accuracy(gen, fit_data);
  result.generative_train_accuracy = acc;
  if (acc <= kGenerativeAdmission)
    result.warnings.push_back("generative model train accuracy " + format_real(acc) +
                              " does not exceed " + format_real(kGenerativeAdmission));
  if (const auto* kde = std::get_if<KdeModel<double>>(&gen))
    result.warnings.insert(result.warnings.end(), kde->warnings.begin(), kde->warnings.end());
}

}  // namespace

GenerativeModel fit_generative(const Dataset& ds, GenKind kind, const TrainConfig& cfg) {
  if (kind == GenKind::kde) return fit_kde<double>(ds, cfg.kde);
  if (kind == GenKind::gm) return fit_gm<double>(ds, cfg.gm);
  throw ConfigError("generative kind must be gm or kde here");
}

TrainResult train_vanilla(const TrainConfig& cfg, const Dataset& train_set, const Dataset* validation) {
  cfg.validate();
  train_set.validate();
  TrainResult result;
  run_training(cfg, train_set, vanilla_provider(train_set, cfg.batch_size), validation, result);
  return result;
}

TrainResult train_mixup(const TrainConfig& cfg, const Dataset& train_set, const Dataset* validation) {
  cfg.validate();
  train_set.validate();
  MixConfig mix = cfg.mix;
  if (mix.labeling == Labeling::genlabel || mix.labeling == Labeling::blend) mix.labeling = Labeling::linear;
  if (cfg.method == Method::mixup_no_mi) mix.exclude_mi = true;
  TrainResult result;
  // The index is built for plain mixup too, so MI-flagged mixes get counted.
  const NnIndex nn(train_set);
  BatchSources sources;
  sources.nn = &nn;
  run_training(cfg, train_set, mix_provider(train_set, mix, cfg.batch_size, sources), validation, result);
  return result;
}

namespace {

// Resolves gamma and the density kind, running cross-validation if asked.
std::pair<TrainConfig, GenKind> resolve_cv(const TrainConfig& cfg, const Dataset& train_set,
                                           TrainResult& result) {
  TrainConfig resolved = cfg;
  GenKind kind = cfg.gen_kind;
  if (kind == GenKind::cv) {
    CVReport report = cross_validate(cfg, train_set);
    resolved.mix.gamma = report.selected_gamma;
    kind = parse_gen_kind(report.selected_kind);
    result.warnings.insert(result.warnings.end(), report.warnings.begin(), report.warnings.end());
    result.cv = std::move(report);
  }
  resolved.gen_kind = kind;
  // An explicit genlabel labeling means pure GenLabel targets unless CV picked gamma.
  if (cfg.gen_kind != GenKind::cv && cfg.mix.labeling == Labeling::genlabel) resolved.mix.gamma = 1.0;
  resolved.mix.labeling = Labeling::blend;
  if (resolved.mix.gamma == 0.0 && cfg.gen_kind != GenKind::cv)
    result.warnings.push_back("gamma is 0: targets are plain mixup labels");
  return {resolved, kind};
}

}  // namespace

TrainResult train_genlabel_input(const TrainConfig& cfg, const Dataset& train_set,
                                 const Dataset* validation) {
  cfg.validate();
  train_set.validate();
  TrainResult result;
  auto [resolved, kind] = resolve_cv(cfg, train_set, result);
  GenerativeModel gen = fit_generative(train_set, kind, resolved);
  admission_check(gen, train_set, result);
  BatchSources sources;
  sources.model = &gen;
  std::optional<NnIndex> nn;
  if (resolved.mix.exclude_mi) {
    nn.emplace(train_set);
    sources.nn = &*nn;
  }
  run_training(resolved, train_set, mix_provider(train_set, resolved.mix, resolved.batch_size, sources),
               validation, result);
  result.generative = std::move(gen);
  return result;
}

TrainResult train_genlabel_latent(const TrainConfig& cfg, const Dataset& train_set,
                                  const Mlp<double>& auxiliary, const Dataset* validation) {
  cfg.validate();
  train_set.validate();
  if (auxiliary.input_dim() != train_set.dim()) throw ConfigError("auxiliary model input dimension mismatch");
  TrainResult result;
  auto [resolved, kind] = resolve_cv(cfg, train_set, result);

  Dataset latent = train_set;
  latent.features = penultimate_batch(auxiliary, train_set.features);
  latent.feature_names.clear();
  GenerativeModel gen = fit_generative(latent, kind, resolved);
  admission_check(gen, latent, result);

  BatchSources sources;
  sources.model = &gen;
  sources.feature_map = [aux = auxiliary](const VectorXd& x) {
    return VectorXd(penultimate_batch(aux, MatrixXd(x.transpose())).row(0).transpose());
  };
  std::optional<NnIndex> nn;
  if (resolved.mix.exclude_mi) {
    nn.emplace(train_set);
    sources.nn = &*nn;
  }
  run_training(resolved, train_set, mix_provider(train_set, resolved.mix, resolved.batch_size, sources),
               validation, result);
  result.generative = std::move(gen);
  return result;
}

TrainResult train_genlabel_latent(const TrainConfig& cfg, const Dataset& train_set,
                                  const Dataset* validation) {
  cfg.validate();
  // The auxiliary model shares the architecture and vanilla hyperparameters,
  // with its own seed stream.
  TrainConfig aux_cfg = cfg;
  aux_cfg.method = Method::vanilla;
  aux_cfg.selection = Selection::last;
  aux_cfg.seed = substream_seed(cfg.seed, "auxiliary");
  TrainResult aux = train_vanilla(aux_cfg, train_set);
  const auto& aux_model = std::get<Mlp<double>>(*aux.classifier);
  return train_genlabel_latent(cfg, train_set, aux_model, validation);
}

TrainResult train_gen_classifier(const TrainConfig& cfg, const Dataset& train_set) {
  cfg.validate();
  train_set.validate();
  if (cfg.gen_kind == GenKind::cv) throw ConfigError("gen_classifier needs gen_kind gm or kde");
  TrainResult result;
  GenerativeModel gen = fit_generative(train_set, cfg.gen_kind, cfg);
  admission_check(gen, train_set, result);
  result.generative = std::move(gen);
  return result;
}

TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset* validation) {
  switch (cfg.method) {
    case Method::vanilla: return train_vanilla(cfg, train_set, validation);
    case Method::mixup:
    case Method::mixup_no_mi: return train_mixup(cfg, train_set, validation);
    case Method::genlabel_input: return train_genlabel_input(cfg, train_set, validation);
    case Method::genlabel_latent: return train_genlabel_latent(cfg, train_set, validation);
    case Method::gen_classifier: return train_gen_classifier(cfg, train_set);
  }
  throw ConfigError("unknown method");
}

double result_accuracy(const TrainResult& result, const Dataset& ds) {
  if (result.classifier) return accuracy(*result.classifier, ds);
  if (result.generative) return generative_classifier_accuracy(*result.generative, ds);
  throw ConfigError("training result holds no model");
}

// ---------------------------------------------------------------------------
// Cross-validation

CVReport cross_validate(const TrainConfig& cfg, const Dataset& train_set) {
  cfg.validate();
  train_set.validate();
  const FoldAssignment folds = fold_indices(train_set, cfg.fold_count, cfg.seed);
  CVReport report;
  report.gamma_grid = cfg.gamma_grid;
  std::sort(report.gamma_grid.begin(), report.gamma_grid.end());
  const std::vector<double>& grid = report.gamma_grid;
  report.kinds = {"gm", "kde"};
  report.stratified = folds.stratified;
  if (!folds.stratified)
    report.warnings.push_back("some class has fewer members than folds; using unstratified folds");

  const size_t n_kinds = report.kinds.size();
  const size_t n_gamma = grid.size();
  const auto n_folds = static_cast<size_t>(cfg.fold_count);
  report.accuracy.assign(n_kinds, std::vector<std::vector<double>>(n_gamma, std::vector<double>(n_folds, 0.0)));

  std::vector<Dataset> fold_train(n_folds), fold_val(n_folds);
  for (size_t f = 0; f < n_folds; ++f) {
    auto [tr, va] = fold_split(folds, static_cast<int>(f));
    fold_train[f] = subset(train_set, tr);
    fold_val[f] = subset(train_set, va);
  }

  const size_t total = n_kinds * n_gamma * n_folds;
  parallel_for(total, cfg.jobs, [&](size_t task) {
    const size_t kind = task / (n_gamma * n_folds);
    const size_t g = (task / n_folds) % n_gamma;
    const size_t f = task % n_folds;
    TrainConfig cell = cfg;
    cell.method = cfg.method == Method::genlabel_latent ? Method::genlabel_latent : Method::genlabel_input;
    cell.gen_kind = kind == 0 ? GenKind::gm : GenKind::kde;
    cell.mix.gamma = grid[g];
    cell.mix.labeling = Labeling::blend;
    cell.selection = Selection::last;
    cell.jobs = 1;
    cell.seed = substream_seed(cfg.seed, "cv-fold-" + std::to_string(f));
    const TrainResult r = train(cell, fold_train[f]);
    report.accuracy[kind][g][f] = result_accuracy(r, fold_val[f]);
  });
  report.runs = static_cast<int>(total);

  report.mean_accuracy.assign(n_kinds, std::vector<double>(n_gamma, 0.0));
  for (size_t k = 0; k < n_kinds; ++k)
    for (size_t g = 0; g < n_gamma; ++g) {
      double s = 0.0;
      for (double a : report.accuracy[k][g]) s += a;
      report.mean_accuracy[k][g] = s / static_cast<double>(n_folds);
    }
  // Ties go to the smaller gamma, then to GM.
  double best = -1.0;
  for (size_t g = 0; g < n_gamma; ++g)
    for (size_t k = 0; k < n_kinds; ++k)
      if (report.mean_accuracy[k][g] > best) {
        best = report.mean_accuracy[k][g];
        report.selected_gamma = grid[g];
        report.selected_kind = report.kinds[k];
      }
  return report;
}

}  // namespace genlabel
