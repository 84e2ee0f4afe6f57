#pragma once

#include "genlabel/augment.hpp"
#include "genlabel/data.hpp"
#include "genlabel/density.hpp"
#include "genlabel/eval.hpp"
#include "genlabel/models.hpp"
#include "genlabel/util.hpp"

#include <optional>
#include <string>
#include <vector>

namespace genlabel {

enum class Method { vanilla, mixup, mixup_no_mi, genlabel_input, genlabel_latent, gen_classifier };
enum class ModelKind { logreg, mlp2 };
enum class GenKind { gm, kde, cv };
/// Checkpoint selection against a validation set.
enum class Selection { last, clean, robust };

Method parse_method(const std::string& s);
std::string to_string(Method m);
ModelKind parse_model_kind(const std::string& s);
std::string to_string(ModelKind m);
GenKind parse_gen_kind(const std::string& s);
std::string to_string(GenKind g);
Selection parse_selection(const std::string& s);
std::string to_string(Selection s);

struct TrainConfig {
  Method method = Method::vanilla;
  MixConfig mix;
  OptimizerConfig opt;
  int epochs = 100;
  int batch_size = 128;
  ModelKind model_kind = ModelKind::mlp2;
  std::vector<int> hidden = {128, 128};
  bool use_bias = true;
  LossKind loss = LossKind::cross_entropy;
  GenKind gen_kind = GenKind::gm;
  GmOptions gm;
  KdeOptions kde;
  std::uint64_t seed = 0;

  Selection selection = Selection::last;
  /// Used by robust selection.
  AttackConfig attack;
  int robust_every = 5;

  std::vector<double> gamma_grid = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  int fold_count = 6;
  int jobs = 1;

  void validate() const;
};

Json to_json(const TrainConfig& cfg);
/// Starts from `base` and overrides the keys present in `j`.
TrainConfig train_config_from_json(const Json& j, TrainConfig base = {});

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  std::optional<double> val_clean;
  std::optional<double> val_robust;
};

struct CVReport {
  std::vector<double> gamma_grid;
  std::vector<std::string> kinds;
  /// accuracy[kind][gamma][fold]
  std::vector<std::vector<std::vector<double>>> accuracy;
  std::vector<std::vector<double>> mean_accuracy;  // [kind][gamma]
  double selected_gamma = 0.0;
  std::string selected_kind = "gm";
  int runs = 0;
  bool stratified = true;
  std::vector<std::string> warnings;
};

Json to_json(const CVReport& r);

struct TrainResult {
  std::optional<Classifier> classifier;
  /// Fitted density (the model itself for gen_classifier; the labeler otherwise).
  std::optional<GenerativeModel> generative;
  /// Accuracy of the generative model as a classifier on its training data.
  std::optional<double> generative_train_accuracy;
  std::vector<EpochRecord> history;
  int selected_epoch = -1;
  std::optional<CVReport> cv;
  std::size_t mixes = 0;
  std::size_t mi_flagged = 0;
  std::vector<std::string> warnings;
};

Json to_json(const TrainResult& r);

/// Admission threshold on the generative model's training accuracy.
inline constexpr double kGenerativeAdmission = 0.95;

/// Dispatches on cfg.method. `validation` is used only for checkpoint selection.
TrainResult train(const TrainConfig& cfg, const Dataset& train_set,
                  const Dataset* validation = nullptr);

TrainResult train_vanilla(const TrainConfig& cfg, const Dataset& train_set,
                          const Dataset* validation = nullptr);
TrainResult train_mixup(const TrainConfig& cfg, const Dataset& train_set,
                        const Dataset* validation = nullptr);
TrainResult train_genlabel_input(const TrainConfig& cfg, const Dataset& train_set,
                                 const Dataset* validation = nullptr);
TrainResult train_genlabel_latent(const TrainConfig& cfg, const Dataset& train_set,
                                  const Dataset* validation = nullptr);
/// Latent variant with a given feature extractor (the auxiliary model).
TrainResult train_genlabel_latent(const TrainConfig& cfg, const Dataset& train_set,
                                  const Mlp<double>& auxiliary,
                                  const Dataset* validation = nullptr);
TrainResult train_gen_classifier(const TrainConfig& cfg, const Dataset& train_set);

/// Fits the density selected by `kind` (gm or kde).
GenerativeModel fit_generative(const Dataset& ds, GenKind kind, const TrainConfig& cfg);

/// Grid over cfg.gamma_grid x {gm, kde} with cfg.fold_count folds. Each cell
/// trains cfg.method (genlabel_input or genlabel_latent) with that gamma.
CVReport cross_validate(const TrainConfig& cfg, const Dataset& train_set);

/// Accuracy of whatever `result` holds (classifier or generative model).
double result_accuracy(const TrainResult& result, const Dataset& ds);

}  // namespace genlabel
