#pragma once

#include "genlabel/types.hpp"

#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace genlabel {

using Json = nlohmann::ordered_json;

// JSON matrices are arrays of rows.
Json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const Json& j);
Json vector_to_json(const VectorXd& v);
VectorXd vector_from_json(const Json& j);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Shortest decimal text that parses back to the same double.
std::string format_real(double v);

/// Adaptive Simpson integration of f over [a, b]. Throws NumericalError when
/// the recursion depth is exhausted before the tolerance is met.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-10, int max_depth = 40);

struct ScalarMin {
  double x = 0.0;
  double value = 0.0;
};

/// Golden-section search for a minimum of a unimodal f on [a, b].
ScalarMin golden_section(const std::function<double(double)>& f, double a, double b,
                         double tol = 1e-10, int max_iter = 200);

/// Dense grid scan on [a, b] (both ends included) followed by golden-section
/// refinement in the bracket around the best grid point.
ScalarMin grid_then_golden(const std::function<double(double)>& f, double a, double b,
                           int grid_points, double tol = 1e-10);

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. The first exception
/// thrown stops the remaining work and is rethrown.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace genlabel
