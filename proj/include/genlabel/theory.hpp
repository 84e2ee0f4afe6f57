#pragma once

#include "genlabel/data.hpp"
#include "genlabel/models.hpp"
#include "genlabel/rng.hpp"
#include "genlabel/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace genlabel {

// Example 1: three points on a line, tent classifier ---------------------------

enum class Example1Scheme { mixup, mixup_without_mi };

/// Which per-pair loss is integrated for the pair that mixes the two outer
/// points: `single_term` charges (1 - f)^2 (optimum 7/16), `full_mse` the
/// two-component squared error 2(1 - f)^2 (optimum 3/8).
enum class Example1Loss { single_term, full_mse };

/// Tent classifier: |x| / (2 theta) for |x| <= 2 theta, else 1.
double tent(double x, double theta);

/// Closed-form objective over theta in (0, 1/2].
double example1_objective(double theta, Example1Scheme scheme, Example1Loss loss = Example1Loss::single_term);
/// Same objective with each pair loss integrated on a midpoint lambda grid.
double example1_objective_quadrature(double theta, Example1Scheme scheme, int lambda_points,
                                     Example1Loss loss = Example1Loss::single_term);

struct Example1Result {
  double theta_closed = 0.0;
  double theta_quadrature = 0.0;
};

Example1Result example1_optimal_theta(Example1Scheme scheme, Example1Loss loss = Example1Loss::single_term,
                                      int lambda_points = 10000);

// Example 3: n + 2 points, bias-free logistic regression on a circle ------------

enum class Example3Scheme { vanilla, mixup, genlabel };

struct Example3Params {
  double r = 25.0;
  int n = 10;
  double sigma = 0.05;  // logistic label width for genlabel
  double alpha = 2.0;   // Beta(alpha, alpha) weight on lambda
  double tol = 1e-10;

  void validate() const;
};

/// Total loss at angle phi for theta = r (cos phi, sin phi).
double example3_loss(Example3Scheme scheme, double phi, const Example3Params& p);

struct PhiStar {
  double phi = 0.0;
  double loss = 0.0;
};

/// Minimizer over (0, pi/2): 2000-point grid, then golden-section refinement.
PhiStar example3_phi_star(Example3Scheme scheme, const Example3Params& p, int grid_points = 2000);

struct ToyLossCurve {
  std::vector<double> phi;
  std::vector<double> vanilla, mixup, genlabel;
  double r = 0.0;
};

ToyLossCurve example3_curve(const Example3Params& p, int points, int jobs = 1);
std::string to_csv(const ToyLossCurve& c);

// Taylor-approximated losses --------------------------------------------------------

/// sigma2 = c sigma1; Sigma has unit diagonal and tau off the diagonal.
struct TheoryParams {
  double sigma1 = 10.0;
  double c = 1.0;
  double tau = 0.0;
  int d = 2;
  /// Taylor coefficients; asymptotic limits unless overridden.
  double A = 0.25;
  double B = 1.0 / 12.0;

  void validate() const;
};

/// Validates and fills A and B with their large-sigma1 limits.
TheoryParams make_theory_params(double c, double tau, int d, double sigma1 = 10.0);

double c_d(double tau, int d);
double asymptotic_A(double c);
double asymptotic_B(double c);
inline constexpr double kMixupA = 1.0 / 3.0;
inline constexpr double kMixupB = 1.0 / 6.0;

struct AbEstimate {
  double A = 0.0;
  double B = 0.0;
  double A_stderr = 0.0;
  double B_stderr = 0.0;
};

/// Monte-Carlo estimate of A and B at finite sigma1: draws x_i from the
/// class at -e1, x_j from the class at +e1 and lambda ~ U[0, 1], and weights
/// by the exact GenLabel weight on x_i's class.
AbEstimate estimate_AB(const TheoryParams& p, int samples, std::uint64_t seed);

/// Scalar-output model f_theta for the two-class analysis.
enum class TheoryModel { logreg, relu_mlp };

struct TaylorLosses {
  double L_std = 0.0;
  double L_mix = 0.0;
  double L_gen = 0.0;
  double L_adv = 0.0;
  double delta_gen = 0.0;
  double R = 0.0;
  double c_x = 0.0;
};

/// Labels: class 0 of `S` is the +1 class (y = 1), class 1 is y = 0.
/// Throws ConfigError when theta is outside the admissible set.
TaylorLosses taylor_losses(const TheoryParams& params, const VectorXd& theta, const Dataset& S);
/// ReLU network with a single output (logit 0 is f).
TaylorLosses taylor_losses(const TheoryParams& params, const Mlp<double>& net, const Dataset& S);

/// (2 y_i - 1) f(x_i) >= 0 for all i.
bool admissible(const VectorXd& theta, const Dataset& S);
bool admissible(const Mlp<double>& net, const Dataset& S);

struct ChainPoint {
  double phi = 0.0;
  bool admissible = false;
  TaylorLosses losses;
  bool mix_gt_gen = false;
  bool gen_ge_adv = false;
  bool holds() const { return mix_gt_gen && gen_ge_adv; }
};

struct ChainReport {
  std::vector<ChainPoint> points;
  int admissible_count = 0;
  int excluded_count = 0;
  int holding_count = 0;
  double min_slack_mix_gen = 0.0;  // min of L_mix - L_gen over admissible angles
  double min_slack_gen_adv = 0.0;  // min of L_gen - L_adv
  double pass_fraction() const {
    return admissible_count ? static_cast<double>(holding_count) / admissible_count : 0.0;
  }
};

struct ChainSetup {
  int per_class = 20;
  double variance = 0.01;
  double radius = 10.0;
  double phi_lo = -0.785398163397448309616;
  double phi_hi = 0.785398163397448309616;
  int phi_points = 201;
  std::uint64_t seed = 0;
  TheoryModel model = TheoryModel::logreg;
  std::vector<int> hidden = {16, 16};
  int max_init_tries = 10000;
  int jobs = 1;
};

/// Two-class Gaussian sample: per_class points around +e1 (class 0) and -e1 (class 1).
Dataset gaussian_pair(int per_class, double variance, std::uint64_t seed);

/// Random bias-free ReLU network with one output and zero training error on S.
Mlp<double> random_admissible_relu(const Dataset& S, const std::vector<int>& hidden, Rng& rng,
                                   int max_tries);

/// Sweeps theta = radius (cos phi, sin phi) for logreg, or rotates the input
/// layer of a random admissible ReLU net by phi (rescaled so its gradient at
/// e1 has norm `radius`).
ChainReport verify_inequality_chain(const TheoryParams& params, const ChainSetup& setup);

std::string to_csv(const ChainReport& r);

}  // namespace genlabel
