#pragma once

#include "genlabel/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace genlabel {

/// Labeled feature matrix. Rows are samples; labels are one-hot rows.
struct Dataset {
  MatrixXd features;  // n x d
  MatrixXd labels;    // n x k, one-hot
  int class_count = 0;
  std::string name;
  std::vector<std::string> class_names;    // index -> original label text
  std::vector<std::string> feature_names;  // may be empty; defaults to x0..x{d-1}

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  int label_of(Eigen::Index i) const;
  std::vector<int> label_indices() const;
  std::vector<Eigen::Index> class_counts() const;

  /// Throws DataError when the one-hot or finiteness invariants are violated.
  void validate() const;
};

/// Builds a dataset from features and integer class ids in [0, class_count).
Dataset make_dataset(MatrixXd features, const std::vector<int>& classes, int class_count,
                     std::string name = {});

Dataset subset(const Dataset& ds, const std::vector<Eigen::Index>& rows);

// Synthetic generators -------------------------------------------------------

/// Horizontal offset of the flipped second copy in the two-circle dataset.
inline constexpr double kTwoCircleShift = 2.5;
/// Inner/outer radius ratio of the circle generators.
inline constexpr double kCircleFactor = 0.8;

/// Names: circle, moon, two-circle, cube2d, cube3d, gauss9, three-dots,
/// n-plus-2-dots. `noise` overrides the dataset's default noise level: the
/// Laplacian scale for circle/moon/two-circle and the per-coordinate variance
/// for gauss9. Cube and dot datasets ignore it.
Dataset make_synthetic(const std::string& name, int n_per_class,
                       std::optional<double> noise, std::uint64_t seed);

const std::vector<std::string>& synthetic_names();

// CSV ------------------------------------------------------------------------

struct CsvLoadResult {
  Dataset data;
  std::vector<std::string> warnings;
};

inline constexpr Eigen::Index kMaxFeatures = 20;
inline constexpr Eigen::Index kMaxSamples = 5000;

/// Reads comma-delimited text with a header row. `label_column` names the
/// label column; when empty the last column is used. Classes are indexed in
/// first-appearance order.
CsvLoadResult load_csv(const std::string& path, const std::string& label_column = {});
CsvLoadResult parse_csv(const std::string& text, const std::string& label_column = {},
                        const std::string& name = {});

/// Writes features followed by a "label" column holding class names.
void write_csv(const Dataset& ds, const std::string& path);
std::string to_csv(const Dataset& ds);

/// FNV-1a hash of a file's bytes, as a 16-digit hex string.
std::string file_fingerprint(const std::string& path);

// Splits and folds -----------------------------------------------------------

struct SplitSpec {
  double train_fraction = 0.8;
  int fold_count = 6;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SplitResult {
  Dataset train;
  Dataset test;
  std::vector<Eigen::Index> train_rows;
  std::vector<Eigen::Index> test_rows;
  bool stratified = false;
};

/// Deterministic train/test split. Stratified by class when every class has at
/// least `fold_count` members.
SplitResult split(const Dataset& ds, const SplitSpec& spec);

struct FoldAssignment {
  std::vector<std::vector<Eigen::Index>> folds;
  bool stratified = false;
};

/// Partitions row indices into `fold_count` disjoint folds.
FoldAssignment fold_indices(const Dataset& ds, int fold_count, std::uint64_t seed);

/// Complement of fold `f` (training rows) and the fold itself (validation rows).
std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> fold_split(
    const FoldAssignment& folds, int f);

/// Per-feature min-max scaling fitted on one dataset and applied to others.
struct MinMaxScaler {
  VectorXd lo, hi;

  static MinMaxScaler fit(const Dataset& ds);
  Dataset apply(const Dataset& ds) const;
};

}  // namespace genlabel
