#pragma once

#include "genlabel/data.hpp"
#include "genlabel/models.hpp"
#include "genlabel/util.hpp"

#include <optional>
#include <string>
#include <vector>

namespace genlabel {

double accuracy(const Classifier& model, const Dataset& ds);
std::vector<double> per_class_accuracy(const std::vector<int>& predicted, const Dataset& ds);

/// min_i y_i theta^T x_i / ||theta|| with class 0 read as +1 and class 1 as -1.
double binary_linear_margin(const VectorXd& theta, const Dataset& ds);

/// Axis-aligned 2-D box split into resolution x resolution cells.
struct GridSpec {
  double x_lo = -1.0, x_hi = 1.0;
  double y_lo = -1.0, y_hi = 1.0;
  int resolution = 100;

  void validate() const;
  double cell_x() const { return (x_hi - x_lo) / resolution; }
  double cell_y() const { return (y_hi - y_lo) / resolution; }
  /// Cell centres in row-major order (y outer, x inner).
  MatrixXd centres() const;
};

struct MarginResult {
  double margin = 0.0;
  double cell_size = 0.0;
  bool misclassified = false;
};

/// Smallest distance from a sample to the centre of a grid cell whose
/// predicted class differs from the sample's class. Accurate to the cell size.
/// Returns 0 with the flag set when some sample is misclassified.
MarginResult multiclass_margin(const Classifier& model, const Dataset& ds, const GridSpec& grid);

/// Same, for an already computed prediction per grid centre.
MarginResult multiclass_margin(const std::vector<int>& grid_classes, const GridSpec& grid,
                               const std::vector<int>& sample_pred, const Dataset& ds);

enum class AttackNorm { linf, l2 };

struct AttackConfig {
  double epsilon = 0.2;
  AttackNorm norm = AttackNorm::linf;

  void validate() const;
};

/// One gradient step of size epsilon along sign(grad) (linf) or grad/||grad||
/// (l2), with grad the cross-entropy gradient at the true labels. No clipping.
MatrixXd fgsm(const Classifier& model, const MatrixXd& x, const MatrixXd& y_onehot,
              const AttackConfig& cfg);

double robust_accuracy(const Classifier& model, const Dataset& ds, const AttackConfig& cfg);

struct BoundaryGrid {
  MatrixXd points;  // m x 2
  std::vector<int> classes;
  MatrixXd probs;  // m x k
};

BoundaryGrid boundary_grid(const Classifier& model, const GridSpec& grid);
/// Columns x0, x1, class, p0..p{k-1}.
std::string boundary_to_csv(const BoundaryGrid& g);

struct MetricBundle {
  double clean_accuracy = 0.0;
  std::optional<double> robust_accuracy;
  std::optional<double> epsilon;
  std::optional<MarginResult> margin;
  std::vector<double> per_class_accuracy;
  Eigen::Index n_eval = 0;
};

Json to_json(const MetricBundle& m);

}  // namespace genlabel
