#pragma once

#include "genlabel/data.hpp"
#include "genlabel/density.hpp"
#include "genlabel/rng.hpp"
#include "genlabel/types.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace genlabel {

enum class Labeling { linear, logistic, genlabel, blend };
enum class SameClassPolicy { mix, skip };
/// What to do with a mix flagged as manifold intrusion when exclusion is on.
enum class MiMode { redraw, drop };

Labeling parse_labeling(const std::string& s);
std::string to_string(Labeling l);

struct MixConfig {
  double alpha = 1.0;
  double gamma = 0.0;
  Labeling labeling = Labeling::linear;
  double logistic_sigma = 0.1;
  bool exclude_mi = false;
  MiMode mi_mode = MiMode::redraw;
  SameClassPolicy same_class_policy = SameClassPolicy::mix;
  /// Weight GenLabel likelihoods by class priors.
  bool posterior = false;

  void validate() const;
};

struct MixSample {
  VectorXd x_mix;
  double lambda = 0.0;
  Eigen::Index source_i = 0;
  Eigen::Index source_j = 0;
  SoftLabel<double> label;
  bool mi_flag = false;
};

/// Draws lambda ~ Beta(alpha, alpha) as X / (X + Y) with X, Y ~ Gamma(alpha).
double sample_lambda(double alpha, Rng& rng);

/// (lambda xi + (1-lambda) xj, lambda yi + (1-lambda) yj).
std::pair<VectorXd, VectorXd> mix_pair(const VectorXd& xi, const VectorXd& yi,
                                       const VectorXd& xj, const VectorXd& yj, double lambda);

/// Weight 1/(1+exp(-2(lambda-1/2)/sigma^2)) on yi.
double logistic_weight(double lambda, double sigma);
SoftLabel<double> logistic_label(const VectorXd& yi, const VectorXd& yj, double lambda,
                                 double sigma);

/// Brute-force Euclidean nearest neighbour over a fixed point set.
class NnIndex {
 public:
  explicit NnIndex(const Dataset& ds);
  /// Index of the nearest point; ties go to the lowest index.
  Eigen::Index nearest(const VectorXd& x) const;
  int label_at(Eigen::Index i) const { return labels_[static_cast<size_t>(i)]; }

 private:
  MatrixXd points_;
  std::vector<int> labels_;
};

/// True when the nearest training point's class differs from both sources.
bool detect_mi(const VectorXd& x_mix, int yi, int yj, const NnIndex& index);
bool detect_mi(const VectorXd& x_mix, int yi, int yj, const Dataset& train);

/// Maps an input point to the space the generative model was fit in.
using FeatureMap = std::function<VectorXd(const VectorXd&)>;

struct BatchSources {
  const GenerativeModel* model = nullptr;
  /// Needed when exclusion is on or MI statistics are wanted.
  const NnIndex* nn = nullptr;
  /// Applied to x_mix before the generative model; identity when empty.
  FeatureMap feature_map;
};

struct Batch {
  std::vector<MixSample> samples;
  std::size_t attempts = 0;    // mixes generated, including discarded ones
  std::size_t mi_flagged = 0;  // mixes flagged as intrusion
};

inline constexpr int kRedrawCapFactor = 50;

/// Pairs are drawn uniformly with replacement. Intrusion flags are computed
/// whenever `sources.nn` is set.
Batch make_batch(const Dataset& train, const BatchSources& sources, const MixConfig& cfg,
                 int batch_size, Rng& rng);

/// Label for one mix under `cfg`. `y_linear` is the linear mixup label.
SoftLabel<double> relabel(const VectorXd& x_mix, const VectorXd& y_linear, const VectorXd& yi,
                          const VectorXd& yj, double lambda, const BatchSources& sources,
                          const MixConfig& cfg);

/// Columns x0..x{d-1}, lambda, source_i, source_j, mi, p0..p{k-1}.
std::string batch_to_csv(const Batch& batch);

}  // namespace genlabel
