#include "genlabel/eval.hpp"

#include <limits>
#include <sstream>

namespace genlabel {

std::vector<double> per_class_accuracy(const std::vector<int>& predicted, const Dataset& ds) {
  std::vector<double> hit(static_cast<size_t>(ds.class_count), 0.0);
  std::vector<double> total(static_cast<size_t>(ds.class_count), 0.0);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const auto c = static_cast<size_t>(ds.label_of(i));
    total[c] += 1.0;
    if (predicted[static_cast<size_t>(i)] == static_cast<int>(c)) hit[c] += 1.0;
  }
  for (size_t c = 0; c < hit.size(); ++c) hit[c] = total[c] > 0.0 ? hit[c] / total[c] : 0.0;
  return hit;
}

double accuracy(const Classifier& model, const Dataset& ds) {
  if (input_dim(model) != ds.dim()) throw ConfigError("model input dimension does not match data");
  const auto pred = predict(model, ds.features);
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    if (pred[static_cast<size_t>(i)] == ds.label_of(i)) ++correct;
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

double binary_linear_margin(const VectorXd& theta, const Dataset& ds) {
  if (ds.class_count != 2) throw ConfigError("binary margin needs a two-class dataset");
  if (theta.size() != ds.dim()) throw ConfigError("theta dimension does not match data");
  const double norm = theta.norm();
  if (!(norm > 0.0)) throw ConfigError("theta must be nonzero");
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const double y = ds.label_of(i) == 0 ? 1.0 : -1.0;
    best = std::min(best, y * theta.dot(ds.features.row(i).transpose()) / norm);
  }
  return best;
}

void GridSpec::validate() const {
  if (resolution < 1) throw ConfigError("grid resolution must be >= 1");
  if (!(x_hi > x_lo) || !(y_hi > y_lo)) throw ConfigError("grid bounds must be increasing");
}

MatrixXd GridSpec::centres() const {
  validate();
  MatrixXd c(static_cast<Eigen::Index>(resolution) * resolution, 2);
  const double hx = cell_x(), hy = cell_y();
  Eigen::Index r = 0;
  for (int iy = 0; iy < resolution; ++iy)
    for (int ix = 0; ix < resolution; ++ix, ++r) {
      c(r, 0) = x_lo + (ix + 0.5) * hx;
      c(r, 1) = y_lo + (iy + 0.5) * hy;
    }
  return c;
}

MarginResult multiclass_margin(const std::vector<int>& grid_classes, const GridSpec& grid,
                               const std::vector<int>& sample_pred, const Dataset& ds) {
  if (ds.dim() != 2) throw ConfigError("grid margin needs 2-D data");
  MarginResult out;
  out.cell_size = std::max(grid.cell_x(), grid.cell_y());
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    if (sample_pred[static_cast<size_t>(i)] != ds.label_of(i)) {
      out.misclassified = true;
      out.margin = 0.0;
      return out;
    }
  const MatrixXd centres = grid.centres();
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const int c = ds.label_of(i);
    const double px = ds.features(i, 0), py = ds.features(i, 1);
    for (Eigen::Index r = 0; r < centres.rows(); ++r) {
      if (grid_classes[static_cast<size_t>(r)] == c) continue;
      const double dx = centres(r, 0) - px, dy = centres(r, 1) - py;
      best = std::min(best, dx * dx + dy * dy);
    }
  }
  // No differently-classified cell anywhere: the margin is at least the
  // distance to the far edge of the box.
  out.margin = std::isfinite(best) ? std::sqrt(best) : std::numeric_limits<double>::infinity();
  return out;
}

MarginResult multiclass_margin(const Classifier& model, const Dataset& ds, const GridSpec& grid) {
  if (input_dim(model) != 2 || ds.dim() != 2) throw ConfigError("grid margin needs a 2-D model");
  return multiclass_margin(predict(model, grid.centres()), grid, predict(model, ds.features), ds);
}

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
}

MatrixXd fgsm(const Classifier& model, const MatrixXd& x, const MatrixXd& y_onehot,
              const AttackConfig& cfg) {
  cfg.validate();
  if (cfg.epsilon == 0.0) return x;
  const MatrixXd g = input_gradient(model, x, y_onehot, LossKind::cross_entropy);
  MatrixXd step(x.rows(), x.cols());
  if (cfg.norm == AttackNorm::linf) {
    step = g.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
  } else {
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      const double n = g.row(i).norm();
      step.row(i) = n > 0.0 ? MatrixXd(g.row(i) / n) : MatrixXd::Zero(1, g.cols());
    }
  }
  return x + cfg.epsilon * step;
}

double robust_accuracy(const Classifier& model, const Dataset& ds, const AttackConfig& cfg) {
  Dataset adv = ds;
  adv.features = fgsm(model, ds.features, ds.labels, cfg);
  return accuracy(model, adv);
}

BoundaryGrid boundary_grid(const Classifier& model, const GridSpec& grid) {
  if (input_dim(model) != 2) throw ConfigError("boundary grid needs a 2-D model");
  BoundaryGrid out;
  out.points = grid.centres();
  const MatrixXd z = logits(model, out.points);
  out.probs.resize(z.rows(), z.cols());
  out.classes.resize(static_cast<size_t>(z.rows()));
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const VectorXd zr = z.row(r).transpose();
    out.probs.row(r) = softmax(zr).transpose();
    out.classes[static_cast<size_t>(r)] = static_cast<int>(argmax(zr));
  }
  return out;
}

std::string boundary_to_csv(const BoundaryGrid& g) {
  std::ostringstream os;
  os << "x0,x1,class";
  for (Eigen::Index c = 0; c < g.probs.cols(); ++c) os << ",p" << c;
  os << '\n';
  for (Eigen::Index r = 0; r < g.points.rows(); ++r) {
    os << format_real(g.points(r, 0)) << ',' << format_real(g.points(r, 1)) << ','
       << g.classes[static_cast<size_t>(r)];
    for (Eigen::Index c = 0; c < g.probs.cols(); ++c) os << ',' << format_real(g.probs(r, c));
    os << '\n';
  }
  return os.str();
}

Json to_json(const MetricBundle& m) {
  Json j;
  j["clean_accuracy"] = m.clean_accuracy;
  if (m.robust_accuracy) j["robust_accuracy"] = *m.robust_accuracy;
  if (m.epsilon) j["epsilon"] = *m.epsilon;
  if (m.margin) {
    j["margin"] = m.margin->margin;
    j["margin_cell_size"] = m.margin->cell_size;
    j["margin_misclassified"] = m.margin->misclassified;
  }
  j["per_class_accuracy"] = m.per_class_accuracy;
  j["n_eval"] = m.n_eval;
  return j;
}

}  // namespace genlabel
