#include "genlabel/models.hpp"

namespace genlabel {

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("Adam eps must be > 0");
  if (!(decay_factor > 0.0)) throw ConfigError("decay_factor must be > 0");
  for (double m : milestones)
    if (!(m > 0.0 && m < 1.0)) throw ConfigError("milestones are fractions in (0, 1)");
}

double OptimizerConfig::rate_at(int epoch, int total_epochs) const {
  double lr = learning_rate;
  for (double m : milestones)
    if (epoch >= static_cast<int>(m * total_epochs)) lr *= decay_factor;
  return lr;
}

void Optimizer::step(VectorXd& params, const VectorXd& grads, double lr, const VectorXd* mask) {
  if (grads.size() != params.size()) throw ConfigError("gradient size mismatch");
  if (!grads.allFinite()) {
    Eigen::Index i = 0;
    while (std::isfinite(grads[i])) ++i;
    throw NumericalError("non-finite gradient at parameter " + std::to_string(i) + " (step " +
                         std::to_string(t_ + 1) + ")");
  }
  if (m_.size() != params.size()) {
    m_ = VectorXd::Zero(params.size());
    v_ = VectorXd::Zero(params.size());
  }
  ++t_;
  VectorXd update;
  if (cfg_.kind == OptimizerKind::sgd) {
    if (cfg_.momentum > 0.0) {
      m_ = t_ == 1 ? grads : VectorXd(cfg_.momentum * m_ + grads);
      update = lr * m_;
    } else {
      update = lr * grads;
    }
  } else {
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grads;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grads.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    update = lr * ((m_ / bc1).array() / ((v_ / bc2).array().sqrt() + cfg_.eps)).matrix();
  }
  if (cfg_.weight_decay > 0.0) update += lr * cfg_.weight_decay * params;
  if (mask) update = update.cwiseProduct(*mask);
  params -= update;
  if (!params.allFinite()) throw NumericalError("parameters became non-finite at step " + std::to_string(t_));
}

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + s + "'");
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

Eigen::Index input_dim(const Classifier& c) {
  return std::visit([](const auto& m) { return m.input_dim(); }, c);
}

Eigen::Index output_dim(const Classifier& c) {
  return std::visit([](const auto& m) { return m.output_dim(); }, c);
}

MatrixXd logits(const Classifier& c, const MatrixXd& x) {
  return std::visit([&](const auto& m) { return MatrixXd(forward_batch(m, x)); }, c);
}

std::vector<int> predict(const Classifier& c, const MatrixXd& x) {
  const MatrixXd z = logits(c, x);
  std::vector<int> out(static_cast<size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    out[static_cast<size_t>(i)] = static_cast<int>(argmax(z.row(i).transpose()));
  return out;
}

MatrixXd input_gradient(const Classifier& c, const MatrixXd& x, const MatrixXd& targets,
                        LossKind kind) {
  return std::visit([&](const auto& m) { return MatrixXd(input_gradient(m, x, targets, kind)); }, c);
}

Json to_json(const Classifier& c) {
  Json j;
  if (const auto* lr = std::get_if<SoftmaxRegression<double>>(&c)) {
    j["kind"] = "logreg";
    j["bias"] = lr->use_bias;
    j["weight"] = matrix_to_json(lr->W);
    j["bias_vector"] = vector_to_json(lr->b);
    return j;
  }
  const auto& mlp = std::get<Mlp<double>>(c);
  j["kind"] = "mlp";
  j["bias"] = mlp.use_bias;
  Json layers = Json::array();
  for (size_t l = 0; l < mlp.layer_count(); ++l) {
    Json e;
    e["weight"] = matrix_to_json(mlp.weights[l]);
    e["bias_vector"] = vector_to_json(mlp.biases[l]);
    layers.push_back(std::move(e));
  }
  j["layers"] = std::move(layers);
  return j;
}

Classifier classifier_from_json(const Json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "logreg") {
      SoftmaxRegression<double> m;
      m.use_bias = j.at("bias").get<bool>();
      m.W = matrix_from_json(j.at("weight"));
      m.b = vector_from_json(j.at("bias_vector"));
      if (m.b.size() != m.W.rows()) throw ConfigError("bias length does not match weight rows");
      return m;
    }
    if (kind == "mlp") {
      Mlp<double> m;
      m.use_bias = j.at("bias").get<bool>();
      for (const auto& e : j.at("layers")) {
        m.weights.push_back(matrix_from_json(e.at("weight")));
        m.biases.push_back(vector_from_json(e.at("bias_vector")));
      }
      if (m.weights.empty()) throw ConfigError("MLP has no layers");
      for (size_t l = 0; l < m.layer_count(); ++l) {
        if (m.biases[l].size() != m.weights[l].rows())
          throw ConfigError("bias length does not match weight rows");
        if (l > 0 && m.weights[l].cols() != m.weights[l - 1].rows())
          throw ConfigError("MLP layer dimensions do not chain");
      }
      return m;
    }
    throw ConfigError("unknown classifier kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed classifier JSON: ") + e.what());
  }
}

}  // namespace genlabel
