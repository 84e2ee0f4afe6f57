#include "genlabel/augment.hpp"

#include "genlabel/util.hpp"

#include <limits>
#include <memory>
#include <sstream>

namespace genlabel {

Labeling parse_labeling(const std::string& s) {
  if (s == "linear") return Labeling::linear;
  if (s == "logistic") return Labeling::logistic;
  if (s == "genlabel") return Labeling::genlabel;
  if (s == "blend") return Labeling::blend;
  throw ConfigError("unknown labeling '" + s + "'");
}

std::string to_string(Labeling l) {
  switch (l) {
    case Labeling::linear: return "linear";
    case Labeling::logistic: return "logistic";
    case Labeling::genlabel: return "genlabel";
    case Labeling::blend: return "blend";
  }
  return "linear";
}

void MixConfig::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(logistic_sigma > 0.0)) throw ConfigError("logistic_sigma must be > 0");
}

double sample_lambda(double alpha, Rng& rng) {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  std::gamma_distribution<double> g(alpha, 1.0);
  for (;;) {
    const double x = g(rng);
    const double y = g(rng);
    const double s = x + y;
    // Both draws underflow only for tiny alpha; retry rather than divide by 0.
    if (s > 0.0) return x / s;
  }
}

std::pair<VectorXd, VectorXd> mix_pair(const VectorXd& xi, const VectorXd& yi,
                                       const VectorXd& xj, const VectorXd& yj, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (xi.size() != xj.size() || yi.size() != yj.size())
    throw ConfigError("dimension mismatch in mix_pair");
  return {lambda * xi + (1.0 - lambda) * xj, lambda * yi + (1.0 - lambda) * yj};
}

double logistic_weight(double lambda, double sigma) {
  return logistic(2.0 * (lambda - 0.5) / (sigma * sigma));
}

SoftLabel<double> logistic_label(const VectorXd& yi, const VectorXd& yj, double lambda,
                                 double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("logistic sigma must be > 0");
  const double rho = logistic_weight(lambda, sigma);
  return {rho * yi + (1.0 - rho) * yj};
}

NnIndex::NnIndex(const Dataset& ds)
    : points_(ds.features), labels_(ds.label_indices()) {
  if (ds.size() < 1) throw DataError("nearest-neighbour index needs a non-empty dataset");
}

Eigen::Index NnIndex::nearest(const VectorXd& x) const {
  const VectorXd d = (points_.rowwise() - x.transpose()).rowwise().squaredNorm();
  Eigen::Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] < best_d) {
      best_d = d[i];
      best = i;
    }
  }
  return best;
}

bool detect_mi(const VectorXd& x_mix, int yi, int yj, const NnIndex& index) {
  const int nn = index.label_at(index.nearest(x_mix));
  return nn != yi && nn != yj;
}

bool detect_mi(const VectorXd& x_mix, int yi, int yj, const Dataset& train) {
  return detect_mi(x_mix, yi, yj, NnIndex(train));
}

SoftLabel<double> relabel(const VectorXd& x_mix, const VectorXd& y_linear, const VectorXd& yi,
                          const VectorXd& yj, double lambda, const BatchSources& sources,
                          const MixConfig& cfg) {
  switch (cfg.labeling) {
    case Labeling::linear: return {y_linear};
    case Labeling::logistic: return logistic_label(yi, yj, lambda, cfg.logistic_sigma);
    case Labeling::genlabel:
    case Labeling::blend: {
      if (!sources.model) throw ConfigError("GenLabel labeling needs a generative model");
      const VectorXd z = sources.feature_map ? sources.feature_map(x_mix) : x_mix;
      const VectorXd gen = genlabel(*sources.model, z, cfg.posterior).probs;
      if (cfg.labeling == Labeling::genlabel) return {gen};
      return {cfg.gamma * gen + (1.0 - cfg.gamma) * y_linear};
    }
  }
  return {y_linear};
}

Batch make_batch(const Dataset& train, const BatchSources& sources, const MixConfig& cfg,
                 int batch_size, Rng& rng) {
  cfg.validate();
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if ((cfg.labeling == Labeling::genlabel || cfg.labeling == Labeling::blend) && !sources.model)
    throw ConfigError("GenLabel labeling needs a generative model");

  std::unique_ptr<NnIndex> own_index;
  const NnIndex* nn = sources.nn;
  if (cfg.exclude_mi && !nn) {
    own_index = std::make_unique<NnIndex>(train);
    nn = own_index.get();
  }

  Batch batch;
  batch.samples.reserve(static_cast<size_t>(batch_size));
  std::uniform_int_distribution<Eigen::Index> pick(0, train.size() - 1);
  const auto cap = static_cast<std::size_t>(kRedrawCapFactor) * static_cast<std::size_t>(batch_size);
  const bool drop_mode = cfg.exclude_mi && cfg.mi_mode == MiMode::drop;

  while (static_cast<int>(batch.samples.size()) < batch_size) {
    if (drop_mode && batch.attempts >= static_cast<std::size_t>(batch_size)) break;
    if (batch.attempts >= cap)
      throw DataError("could not fill a batch of " + std::to_string(batch_size) + " in " +
                      std::to_string(cap) + " attempts; nearly every mix is excluded");
    ++batch.attempts;
    const Eigen::Index i = pick(rng);
    const Eigen::Index j = pick(rng);
    const double lambda = sample_lambda(cfg.alpha, rng);
    const int ci = train.label_of(i);
    const int cj = train.label_of(j);
    if (cfg.same_class_policy == SameClassPolicy::skip && ci == cj) continue;

    const VectorXd xi = train.features.row(i).transpose();
    const VectorXd xj = train.features.row(j).transpose();
    const VectorXd yi = train.labels.row(i).transpose();
    const VectorXd yj = train.labels.row(j).transpose();
    auto [x_mix, y_linear] = mix_pair(xi, yi, xj, yj, lambda);

    MixSample s;
    s.lambda = lambda;
    s.source_i = i;
    s.source_j = j;
    if (nn) {
      s.mi_flag = detect_mi(x_mix, ci, cj, *nn);
      if (s.mi_flag) ++batch.mi_flagged;
    }
    if (cfg.exclude_mi && s.mi_flag) continue;
    s.label = relabel(x_mix, y_linear, yi, yj, lambda, sources, cfg);
    s.x_mix = std::move(x_mix);
    batch.samples.push_back(std::move(s));
  }
  return batch;
}

std::string batch_to_csv(const Batch& batch) {
  std::ostringstream os;
  if (batch.samples.empty()) return "lambda,source_i,source_j,mi\n";
  const Eigen::Index d = batch.samples.front().x_mix.size();
  const Eigen::Index k = batch.samples.front().label.size();
  for (Eigen::Index j = 0; j < d; ++j) os << 'x' << j << ',';
  os << "lambda,source_i,source_j,mi";
  for (Eigen::Index c = 0; c < k; ++c) os << ",p" << c;
  os << '\n';
  for (const auto& s : batch.samples) {
    for (Eigen::Index j = 0; j < d; ++j) os << format_real(s.x_mix[j]) << ',';
    os << format_real(s.lambda) << ',' << s.source_i << ',' << s.source_j << ','
       << (s.mi_flag ? 1 : 0);
    for (Eigen::Index c = 0; c < k; ++c) os << ',' << format_real(s.label.probs[c]);
    os << '\n';
  }
  return os.str();
}

}  // namespace genlabel
