#pragma once

#include "genlabel/data.hpp"
#include "genlabel/types.hpp"
#include "genlabel/util.hpp"

#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace genlabel {

namespace detail {

template <typename Scalar>
Scalar half_log_two_pi() {
  return Scalar(0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
}

// Biased (1/n) covariance of the rows of x.
template <typename Scalar>
Matrix<Scalar> biased_covariance(const Matrix<Scalar>& x, const Vector<Scalar>& mean) {
  const Matrix<Scalar> centered = x.rowwise() - mean.transpose();
  return (centered.transpose() * centered) / Scalar(x.rows());
}

template <typename Scalar>
Matrix<Scalar> class_rows(const Dataset& ds, int c) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    if (ds.label_of(i) == c) rows.push_back(i);
  Matrix<Scalar> out(static_cast<Eigen::Index>(rows.size()), ds.dim());
  for (size_t r = 0; r < rows.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = ds.features.row(rows[r]).template cast<Scalar>();
  return out;
}

}  // namespace detail

/// One full-covariance Gaussian per class.
template <typename Scalar = double>
struct GaussianModel {
  std::vector<Vector<Scalar>> means;
  std::vector<Matrix<Scalar>> covariances;  // regularized
  std::vector<Matrix<Scalar>> chol;         // lower Cholesky factors
  std::vector<Scalar> log_dets;
  std::vector<Scalar> priors;
  std::vector<Scalar> eps_reg;  // regularizer actually added, per class

  int class_count() const { return static_cast<int>(means.size()); }
  Eigen::Index dim() const { return means.empty() ? 0 : means.front().size(); }

  /// Recomputes the Cholesky factors from `covariances`.
  void factorize() {
    chol.clear();
    log_dets.clear();
    for (size_t c = 0; c < covariances.size(); ++c) {
      Eigen::LLT<Matrix<Scalar>> llt(covariances[c]);
      if (llt.info() != Eigen::Success)
        throw NumericalError("covariance of class " + std::to_string(c) +
                             " is not positive definite");
      Matrix<Scalar> l = llt.matrixL();
      chol.push_back(l);
      log_dets.push_back(Scalar(2) * l.diagonal().array().log().sum());
    }
  }

  Scalar log_likelihood(const Vector<Scalar>& x, int c) const {
    if (c < 0 || c >= class_count()) throw ConfigError("class index out of range");
    if (x.size() != dim()) throw ConfigError("dimension mismatch in log_likelihood");
    const Vector<Scalar> z =
        chol[static_cast<size_t>(c)].template triangularView<Eigen::Lower>().solve(
            x - means[static_cast<size_t>(c)]);
    return -Scalar(dim()) * detail::half_log_two_pi<Scalar>() -
           Scalar(0.5) * log_dets[static_cast<size_t>(c)] - Scalar(0.5) * z.squaredNorm();
  }
};

/// Per-class kernel density estimate: (1/n_c) sum_i N(x_i, h_c^2 S_c).
template <typename Scalar = double>
struct KdeModel {
  std::vector<Matrix<Scalar>> banks;       // n_c x d
  std::vector<Scalar> bandwidths;          // h_c
  std::vector<Matrix<Scalar>> kernel_cov;  // S_c, before the h^2 factor
  bool diagonal = false;
  std::vector<std::string> warnings;

  // Derived: bank rows whitened by (h L)^-1 and the per-class normalizer.
  std::vector<Matrix<Scalar>> whitened;
  std::vector<Matrix<Scalar>> chol;
  std::vector<Scalar> log_norm;

  int class_count() const { return static_cast<int>(banks.size()); }
  Eigen::Index dim() const { return banks.empty() ? 0 : banks.front().cols(); }

  void factorize() {
    whitened.clear();
    chol.clear();
    log_norm.clear();
    const Eigen::Index d = dim();
    for (size_t c = 0; c < banks.size(); ++c) {
      Eigen::LLT<Matrix<Scalar>> llt(kernel_cov[c]);
      if (llt.info() != Eigen::Success)
        throw NumericalError("kernel covariance of class " + std::to_string(c) +
                             " is not positive definite");
      Matrix<Scalar> l = Matrix<Scalar>(llt.matrixL()) * bandwidths[c];
      // Each row b becomes (hL)^-1 b, stored as a row.
      Matrix<Scalar> w =
          l.template triangularView<Eigen::Lower>().solve(banks[c].transpose()).transpose();
      const Scalar log_det = Scalar(2) * l.diagonal().array().log().sum();
      log_norm.push_back(-std::log(Scalar(banks[c].rows())) -
                         Scalar(d) * detail::half_log_two_pi<Scalar>() - Scalar(0.5) * log_det);
      chol.push_back(std::move(l));
      whitened.push_back(std::move(w));
    }
  }

  Scalar log_likelihood(const Vector<Scalar>& x, int c) const {
    if (c < 0 || c >= class_count()) throw ConfigError("class index out of range");
    if (x.size() != dim()) throw ConfigError("dimension mismatch in log_likelihood");
    const auto ci = static_cast<size_t>(c);
    const Vector<Scalar> z = chol[ci].template triangularView<Eigen::Lower>().solve(x);
    const Vector<Scalar> terms =
        Scalar(-0.5) * (whitened[ci].rowwise() - z.transpose()).rowwise().squaredNorm();
    return log_norm[ci] + log_sum_exp(terms);
  }
};

using GenerativeModel = std::variant<GaussianModel<double>, KdeModel<double>>;

struct GmOptions {
  /// Added to every class covariance. When unset, 1e-6 * trace(S_c) / d, or
  /// 1e-6 when the class covariance is zero.
  std::optional<double> eps_reg;
};

struct KdeOptions {
  /// Fixed bandwidth for every class. When unset, Scott's factor n_c^(-1/(d+4)).
  std::optional<double> bandwidth;
  /// Keep only the diagonal of the class covariance.
  bool diagonal = false;
};

inline constexpr double kDefaultEpsScale = 1e-6;

template <typename Scalar = double>
GaussianModel<Scalar> fit_gm(const Dataset& train, const GmOptions& opt = {}) {
  if (opt.eps_reg && *opt.eps_reg < 0.0) throw ConfigError("eps_reg must be >= 0");
  GaussianModel<Scalar> m;
  const Eigen::Index d = train.dim();
  for (int c = 0; c < train.class_count; ++c) {
    const Matrix<Scalar> x = detail::class_rows<Scalar>(train, c);
    if (x.rows() == 0) throw DataError("class " + std::to_string(c) + " has no samples");
    const Vector<Scalar> mu = x.colwise().mean().transpose();
    Matrix<Scalar> cov = detail::biased_covariance<Scalar>(x, mu);
    Scalar eps;
    if (opt.eps_reg) {
      eps = Scalar(*opt.eps_reg);
    } else {
      eps = Scalar(kDefaultEpsScale) * cov.trace() / Scalar(d);
      if (!(eps > Scalar(0))) eps = Scalar(kDefaultEpsScale);
    }
    cov.diagonal().array() += eps;
    m.means.push_back(mu);
    m.covariances.push_back(std::move(cov));
    m.priors.push_back(Scalar(x.rows()) / Scalar(train.size()));
    m.eps_reg.push_back(eps);
  }
  m.factorize();
  return m;
}

/// Scott's rule factor for a class of n_c samples in d dimensions.
inline double scott_bandwidth(Eigen::Index n_c, Eigen::Index d) {
  return std::pow(static_cast<double>(n_c), -1.0 / (static_cast<double>(d) + 4.0));
}

template <typename Scalar = double>
KdeModel<Scalar> fit_kde(const Dataset& train, const KdeOptions& opt = {}) {
  if (opt.bandwidth && !(*opt.bandwidth > 0.0)) throw ConfigError("KDE bandwidth must be > 0");
  KdeModel<Scalar> m;
  m.diagonal = opt.diagonal;
  const Eigen::Index d = train.dim();
  for (int c = 0; c < train.class_count; ++c) {
    Matrix<Scalar> x = detail::class_rows<Scalar>(train, c);
    if (x.rows() == 0) throw DataError("class " + std::to_string(c) + " has no samples");
    const Vector<Scalar> mu = x.colwise().mean().transpose();
    Matrix<Scalar> cov = detail::biased_covariance<Scalar>(x, mu);
    if (opt.diagonal) cov = Matrix<Scalar>(cov.diagonal().asDiagonal());

    // Treat the covariance as singular when its smallest eigenvalue is
    // negligible against the largest.
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(cov, Eigen::EigenvaluesOnly);
    const Scalar lo = eig.eigenvalues().minCoeff();
    const Scalar hi = eig.eigenvalues().maxCoeff();
    if (!(hi > Scalar(0)) || lo <= Scalar(1e-12) * hi) {
      m.warnings.push_back("class " + std::to_string(c) +
                           " covariance is singular; using identity kernel covariance");
      cov = Matrix<Scalar>::Identity(d, d);
    }
    m.bandwidths.push_back(Scalar(opt.bandwidth ? *opt.bandwidth : scott_bandwidth(x.rows(), d)));
    m.kernel_cov.push_back(std::move(cov));
    m.banks.push_back(std::move(x));
  }
  m.factorize();
  return m;
}

// Variant-level access --------------------------------------------------------

int class_count(const GenerativeModel& model);
Eigen::Index dim(const GenerativeModel& model);
std::string kind_name(const GenerativeModel& model);

double log_likelihood(const GenerativeModel& model, const VectorXd& x, int c);

/// Per-class log-likelihoods; adds log priors when `posterior` is set (GM only;
/// KDE priors are the class frequencies of the banks).
VectorXd log_likelihoods(const GenerativeModel& model, const VectorXd& x, bool posterior = false);

/// Softmax of per-class log-likelihoods.
SoftLabel<double> genlabel(const GenerativeModel& model, const VectorXd& x,
                           bool posterior = false);

/// Fraction of samples whose argmax GenLabel entry is the true class.
double generative_classifier_accuracy(const GenerativeModel& model, const Dataset& ds,
                                      bool posterior = false);

/// Argmax class per row (lowest index on ties).
std::vector<int> generative_predict(const GenerativeModel& model, const MatrixXd& x,
                                    bool posterior = false);

Json to_json(const GenerativeModel& model);
GenerativeModel generative_model_from_json(const Json& j);

}  // namespace genlabel
