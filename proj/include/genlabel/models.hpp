#pragma once

#include "genlabel/rng.hpp"
#include "genlabel/types.hpp"
#include "genlabel/util.hpp"

#include <string>
#include <variant>
#include <vector>

namespace genlabel {

/// Logits W x + b.
template <typename Scalar = double>
struct SoftmaxRegression {
  Matrix<Scalar> W;  // k x d
  Vector<Scalar> b;  // k, zero and untouched when use_bias is off
  bool use_bias = true;

  Eigen::Index input_dim() const { return W.cols(); }
  Eigen::Index output_dim() const { return W.rows(); }
};

/// Fully connected net, ReLU on hidden layers and identity on the output.
/// weights[l] maps layer l (size in) to layer l+1 (size out) and is out x in.
template <typename Scalar = double>
struct Mlp {
  std::vector<Matrix<Scalar>> weights;
  std::vector<Vector<Scalar>> biases;
  bool use_bias = true;

  Eigen::Index input_dim() const { return weights.front().cols(); }
  Eigen::Index output_dim() const { return weights.back().rows(); }
  size_t layer_count() const { return weights.size(); }
};

using Classifier = std::variant<SoftmaxRegression<double>, Mlp<double>>;

enum class LossKind { cross_entropy, mse };

template <typename Scalar>
struct LossGrad {
  Scalar loss;
  Vector<Scalar> grad;
};

// Initialization ---------------------------------------------------------------

template <typename Scalar = double>
Matrix<Scalar> uniform_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix<Scalar> m(rows, cols);
  // Fill row by row so the draw order is independent of Eigen's storage order.
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = Scalar(u(rng));
  return m;
}

template <typename Scalar = double>
SoftmaxRegression<Scalar> make_softmax_regression(Eigen::Index d, Eigen::Index k, bool use_bias,
                                                  Rng& rng) {
  if (d < 1 || k < 1) throw ConfigError("model dimensions must be positive");
  SoftmaxRegression<Scalar> m;
  m.use_bias = use_bias;
  m.W = uniform_init<Scalar>(k, d, d, rng);
  m.b = use_bias ? Vector<Scalar>(uniform_init<Scalar>(k, 1, d, rng)) : Vector<Scalar>::Zero(k);
  return m;
}

template <typename Scalar = double>
Mlp<Scalar> make_mlp(Eigen::Index d, const std::vector<int>& hidden, Eigen::Index k, bool use_bias,
                     Rng& rng) {
  if (d < 1 || k < 1) throw ConfigError("model dimensions must be positive");
  Mlp<Scalar> m;
  m.use_bias = use_bias;
  Eigen::Index in = d;
  std::vector<Eigen::Index> sizes;
  for (int h : hidden) {
    if (h < 1) throw ConfigError("hidden layer sizes must be positive");
    sizes.push_back(h);
  }
  sizes.push_back(k);
  for (Eigen::Index out : sizes) {
    m.weights.push_back(uniform_init<Scalar>(out, in, in, rng));
    m.biases.push_back(use_bias ? Vector<Scalar>(uniform_init<Scalar>(out, 1, in, rng))
                                : Vector<Scalar>::Zero(out));
    in = out;
  }
  return m;
}

// Forward ------------------------------------------------------------------------

/// Row-wise logits for the rows of x (n x d -> n x k).
template <typename Scalar>
Matrix<Scalar> forward_batch(const SoftmaxRegression<Scalar>& m, const Matrix<Scalar>& x) {
  if (x.cols() != m.input_dim()) throw ConfigError("input dimension mismatch");
  Matrix<Scalar> z = x * m.W.transpose();
  if (m.use_bias) z.rowwise() += m.b.transpose();
  return z;
}

template <typename Scalar>
Matrix<Scalar> forward_batch(const Mlp<Scalar>& m, const Matrix<Scalar>& x) {
  if (x.cols() != m.input_dim()) throw ConfigError("input dimension mismatch");
  Matrix<Scalar> a = x;
  for (size_t l = 0; l < m.layer_count(); ++l) {
    Matrix<Scalar> z = a * m.weights[l].transpose();
    if (m.use_bias) z.rowwise() += m.biases[l].transpose();
    if (l + 1 < m.layer_count()) z = z.cwiseMax(Scalar(0));
    a = std::move(z);
  }
  return a;
}

template <typename Scalar>
Vector<Scalar> forward(const SoftmaxRegression<Scalar>& m, const Vector<Scalar>& x) {
  if (x.size() != m.input_dim()) throw ConfigError("input dimension mismatch");
  Vector<Scalar> z = m.W * x;
  if (m.use_bias) z += m.b;
  return z;
}

template <typename Scalar>
Vector<Scalar> forward(const Mlp<Scalar>& m, const Vector<Scalar>& x) {
  return forward_batch(m, Matrix<Scalar>(x.transpose())).row(0).transpose();
}

/// Last hidden activations of an MLP (the feature extractor output).
template <typename Scalar>
Matrix<Scalar> penultimate_batch(const Mlp<Scalar>& m, const Matrix<Scalar>& x) {
  if (m.layer_count() < 2) throw ConfigError("MLP has no hidden layer");
  Matrix<Scalar> a = x;
  for (size_t l = 0; l + 1 < m.layer_count(); ++l) {
    Matrix<Scalar> z = a * m.weights[l].transpose();
    if (m.use_bias) z.rowwise() += m.biases[l].transpose();
    a = z.cwiseMax(Scalar(0));
  }
  return a;
}

// Losses -------------------------------------------------------------------------

/// -sum_c t_c log softmax(z)_c and its gradient softmax(z) - t.
template <typename Scalar>
LossGrad<Scalar> cross_entropy(const Vector<Scalar>& logits, const Vector<Scalar>& target) {
  if (logits.size() != target.size()) throw ConfigError("dimension mismatch in cross_entropy");
  const Scalar lse = log_sum_exp(logits);
  const Vector<Scalar> log_p = logits.array() - lse;
  Scalar loss = Scalar(0);
  for (Eigen::Index c = 0; c < logits.size(); ++c)
    if (target[c] != Scalar(0)) loss -= target[c] * log_p[c];
  return {loss, Vector<Scalar>(log_p.array().exp().matrix() - target)};
}

/// ||pred - target||^2 and its gradient.
template <typename Scalar>
LossGrad<Scalar> mse_loss(const Vector<Scalar>& pred, const Vector<Scalar>& target) {
  if (pred.size() != target.size()) throw ConfigError("dimension mismatch in mse_loss");
  const Vector<Scalar> diff = pred - target;
  return {diff.squaredNorm(), Scalar(2) * diff};
}

/// Per-row losses and gradients with respect to the logits.
template <typename Scalar>
Scalar loss_rows(const Matrix<Scalar>& logits, const Matrix<Scalar>& targets, LossKind kind,
                 Matrix<Scalar>& grad) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols())
    throw ConfigError("target shape mismatch");
  grad.resize(logits.rows(), logits.cols());
  Scalar total = Scalar(0);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Vector<Scalar> z = logits.row(i).transpose();
    const Vector<Scalar> t = targets.row(i).transpose();
    const LossGrad<Scalar> lg = kind == LossKind::cross_entropy ? cross_entropy(z, t) : mse_loss(z, t);
    total += lg.loss;
    grad.row(i) = lg.grad.transpose();
  }
  return total;
}

// Backward -----------------------------------------------------------------------

template <typename Model>
struct Backward {
  double loss = 0.0;  // mean over rows
  Model grads;
};

/// Mean loss over rows of x and its exact gradient with respect to every
/// parameter. Bias gradients stay zero when the model has no bias.
template <typename Scalar>
Backward<SoftmaxRegression<Scalar>> backward(const SoftmaxRegression<Scalar>& m,
                                             const Matrix<Scalar>& x, const Matrix<Scalar>& targets,
                                             LossKind kind) {
  Matrix<Scalar> g;
  const Scalar n = Scalar(x.rows());
  const Scalar total = loss_rows(forward_batch(m, x), targets, kind, g);
  g /= n;
  Backward<SoftmaxRegression<Scalar>> out;
  out.loss = static_cast<double>(total / n);
  out.grads.use_bias = m.use_bias;
  out.grads.W = g.transpose() * x;
  out.grads.b = m.use_bias ? Vector<Scalar>(g.colwise().sum().transpose())
                           : Vector<Scalar>::Zero(m.output_dim());
  return out;
}

namespace detail {

template <typename Scalar>
struct MlpTape {
  std::vector<Matrix<Scalar>> acts;  // acts[0] = input, acts[l+1] = output of layer l
};

template <typename Scalar>
MlpTape<Scalar> mlp_forward_tape(const Mlp<Scalar>& m, const Matrix<Scalar>& x) {
  if (x.cols() != m.input_dim()) throw ConfigError("input dimension mismatch");
  MlpTape<Scalar> tape;
  tape.acts.push_back(x);
  for (size_t l = 0; l < m.layer_count(); ++l) {
    Matrix<Scalar> z = tape.acts.back() * m.weights[l].transpose();
    if (m.use_bias) z.rowwise() += m.biases[l].transpose();
    if (l + 1 < m.layer_count()) z = z.cwiseMax(Scalar(0));
    tape.acts.push_back(std::move(z));
  }
  return tape;
}

// Propagates dL/d(logits) back through the net. Fills parameter gradients when
// `grads` is non-null and returns dL/d(input).
template <typename Scalar>
Matrix<Scalar> mlp_backprop(const Mlp<Scalar>& m, const MlpTape<Scalar>& tape, Matrix<Scalar> delta,
                            Mlp<Scalar>* grads) {
  const size_t L = m.layer_count();
  if (grads) {
    grads->weights.resize(L);
    grads->biases.resize(L);
    grads->use_bias = m.use_bias;
  }
  for (size_t l = L; l-- > 0;) {
    if (l + 1 < L) {
      // ReLU mask of this layer's output; derivative at exactly 0 is 0.
      delta = delta.cwiseProduct(
          (tape.acts[l + 1].array() > Scalar(0)).template cast<Scalar>().matrix());
    }
    if (grads) {
      grads->weights[l] = delta.transpose() * tape.acts[l];
      grads->biases[l] = m.use_bias ? Vector<Scalar>(delta.colwise().sum().transpose())
                                    : Vector<Scalar>::Zero(m.weights[l].rows());
    }
    delta = delta * m.weights[l];
  }
  return delta;
}

}  // namespace detail

template <typename Scalar>
Backward<Mlp<Scalar>> backward(const Mlp<Scalar>& m, const Matrix<Scalar>& x,
                               const Matrix<Scalar>& targets, LossKind kind) {
  const auto tape = detail::mlp_forward_tape(m, x);
  Matrix<Scalar> g;
  const Scalar n = Scalar(x.rows());
  const Scalar total = loss_rows(tape.acts.back(), targets, kind, g);
  g /= n;
  Backward<Mlp<Scalar>> out;
  out.loss = static_cast<double>(total / n);
  detail::mlp_backprop(m, tape, std::move(g), &out.grads);
  return out;
}

/// Gradient of each row's own loss with respect to that row's input.
template <typename Scalar>
Matrix<Scalar> input_gradient(const SoftmaxRegression<Scalar>& m, const Matrix<Scalar>& x,
                              const Matrix<Scalar>& targets, LossKind kind) {
  Matrix<Scalar> g;
  loss_rows(forward_batch(m, x), targets, kind, g);
  return g * m.W;
}

template <typename Scalar>
Matrix<Scalar> input_gradient(const Mlp<Scalar>& m, const Matrix<Scalar>& x,
                              const Matrix<Scalar>& targets, LossKind kind) {
  const auto tape = detail::mlp_forward_tape(m, x);
  Matrix<Scalar> g;
  loss_rows(tape.acts.back(), targets, kind, g);
  return detail::mlp_backprop(m, tape, std::move(g), static_cast<Mlp<Scalar>*>(nullptr));
}

/// Gradient of logit `c` with respect to the input, one row per input row.
template <typename Scalar>
Matrix<Scalar> logit_input_gradient(const Mlp<Scalar>& m, const Matrix<Scalar>& x, Eigen::Index c) {
  const auto tape = detail::mlp_forward_tape(m, x);
  Matrix<Scalar> seed = Matrix<Scalar>::Zero(x.rows(), m.output_dim());
  seed.col(c).setOnes();
  return detail::mlp_backprop(m, tape, std::move(seed), static_cast<Mlp<Scalar>*>(nullptr));
}

template <typename Scalar>
Matrix<Scalar> logit_input_gradient(const SoftmaxRegression<Scalar>& m, const Matrix<Scalar>& x,
                                    Eigen::Index c) {
  return m.W.row(c).replicate(x.rows(), 1);
}

// Flat parameter views -------------------------------------------------------------

template <typename Scalar>
Eigen::Index parameter_count(const SoftmaxRegression<Scalar>& m) {
  return m.W.size() + m.b.size();
}

template <typename Scalar>
Eigen::Index parameter_count(const Mlp<Scalar>& m) {
  Eigen::Index n = 0;
  for (size_t l = 0; l < m.layer_count(); ++l) n += m.weights[l].size() + m.biases[l].size();
  return n;
}

namespace detail {

template <typename Scalar, typename F>
void for_each_block(SoftmaxRegression<Scalar>& m, F&& f) {
  f(m.W.data(), m.W.size(), true);
  f(m.b.data(), m.b.size(), m.use_bias);
}

template <typename Scalar, typename F>
void for_each_block(Mlp<Scalar>& m, F&& f) {
  for (size_t l = 0; l < m.layer_count(); ++l) {
    f(m.weights[l].data(), m.weights[l].size(), true);
    f(m.biases[l].data(), m.biases[l].size(), m.use_bias);
  }
}

}  // namespace detail

/// Parameters concatenated block by block (each block in Eigen storage order).
template <typename Model>
VectorXd flatten(const Model& m) {
  Model copy = m;
  VectorXd out(parameter_count(copy));
  Eigen::Index off = 0;
  detail::for_each_block(copy, [&](auto* p, Eigen::Index n, bool) {
    for (Eigen::Index i = 0; i < n; ++i) out[off + i] = static_cast<double>(p[i]);
    off += n;
  });
  return out;
}

template <typename Model>
void unflatten(Model& m, const VectorXd& flat) {
  if (flat.size() != parameter_count(m)) throw ConfigError("flat parameter size mismatch");
  Eigen::Index off = 0;
  detail::for_each_block(m, [&](auto* p, Eigen::Index n, bool) {
    for (Eigen::Index i = 0; i < n; ++i) p[i] = flat[off + i];
    off += n;
  });
}

/// 1 for trainable entries, 0 for bias entries of bias-free models.
template <typename Model>
VectorXd trainable_mask(const Model& m) {
  Model copy = m;
  VectorXd out(parameter_count(copy));
  Eigen::Index off = 0;
  detail::for_each_block(copy, [&](auto*, Eigen::Index n, bool trainable) {
    out.segment(off, n).setConstant(trainable ? 1.0 : 0.0);
    off += n;
  });
  return out;
}

// Optimizers -----------------------------------------------------------------------

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double learning_rate = 0.1;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  /// Fractions of the total epoch count at which the rate is multiplied by
  /// `decay_factor`.
  std::vector<double> milestones = {0.5, 0.75};
  double decay_factor = 0.1;

  void validate() const;
  /// Rate for the given 0-based epoch.
  double rate_at(int epoch, int total_epochs) const;
};

/// SGD with PyTorch-style momentum or Adam, both with decoupled weight decay
/// lr * wd * w subtracted from the weights.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  /// Updates `params` in place. Entries where `mask` is 0 are left untouched.
  /// Throws NumericalError on a non-finite gradient.
  void step(VectorXd& params, const VectorXd& grads, double lr, const VectorXd* mask = nullptr);

  template <typename Model>
  void step(Model& m, const Model& grads, double lr) {
    VectorXd p = flatten(m);
    const VectorXd mask = trainable_mask(m);
    step(p, flatten(grads), lr, &mask);
    unflatten(m, p);
  }

  const OptimizerConfig& config() const { return cfg_; }
  long steps() const { return t_; }

 private:
  OptimizerConfig cfg_;
  VectorXd m_, v_;
  long t_ = 0;
};

OptimizerKind parse_optimizer(const std::string& s);
std::string to_string(OptimizerKind k);

// Variant-level helpers ------------------------------------------------------------

Eigen::Index input_dim(const Classifier& c);
Eigen::Index output_dim(const Classifier& c);
MatrixXd logits(const Classifier& c, const MatrixXd& x);
/// Argmax of each row's logits, lowest index on ties.
std::vector<int> predict(const Classifier& c, const MatrixXd& x);
MatrixXd input_gradient(const Classifier& c, const MatrixXd& x, const MatrixXd& targets,
                        LossKind kind = LossKind::cross_entropy);

Json to_json(const Classifier& c);
Classifier classifier_from_json(const Json& j);

}  // namespace genlabel
