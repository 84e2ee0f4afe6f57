#include "genlabel/theory.hpp"

#include "genlabel/util.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace genlabel {

// Example 1 ---------------------------------------------------------------------

double tent(double x, double theta) {
  const double a = std::abs(x);
  return a <= 2.0 * theta ? a / (2.0 * theta) : 1.0;
}

namespace {

void check_theta1(double theta) {
  if (!(theta > 0.0 && theta <= 0.5)) throw ConfigError("theta must lie in (0, 1/2]");
}

// Pair losses in lambda under MSE on [f, 1 - f]. Pairs 1 and 2 mix the centre
// point with an outer one; pair 3 mixes the two outer points.
double pair_outer_centre(double lambda, double theta) {
  const double e = lambda - tent(lambda, theta);
  return 2.0 * e * e;
}

double pair_outer_outer(double lambda, double theta, Example1Loss loss) {
  const double e = 1.0 - tent(2.0 * lambda - 1.0, theta);
  return (loss == Example1Loss::full_mse ? 2.0 : 1.0) * e * e;
}

double combine1(double l1, double l2, double l3, Example1Scheme scheme) {
  // Averages over ordered pairs drawn with replacement: 9 draws for mixup,
  // 4 cross-class draws without MI. Constant factors follow the closed forms.
  return scheme == Example1Scheme::mixup ? 1.5 * (l1 + l2 + l3) : 0.75 * (l1 + l2);
}

}  // namespace

double example1_objective(double theta, Example1Scheme scheme, Example1Loss loss) {
  check_theta1(theta);
  const double l12 = (2.0 / 3.0) * (2.0 * theta - 1.0) * (2.0 * theta - 1.0);
  const double l3 = (loss == Example1Loss::full_mse ? 4.0 / 3.0 : 2.0 / 3.0) * theta;
  return combine1(l12, l12, l3, scheme);
}

double example1_objective_quadrature(double theta, Example1Scheme scheme, int lambda_points,
                                     Example1Loss loss) {
  check_theta1(theta);
  if (lambda_points < 1) throw ConfigError("lambda_points must be >= 1");
  double l1 = 0.0, l3 = 0.0;
  const double h = 1.0 / lambda_points;
  for (int k = 0; k < lambda_points; ++k) {
    const double lam = (k + 0.5) * h;
    l1 += pair_outer_centre(lam, theta);
    l3 += pair_outer_outer(lam, theta, loss);
  }
  l1 *= h;
  l3 *= h;
  return combine1(l1, l1, l3, scheme);
}

Example1Result example1_optimal_theta(Example1Scheme scheme, Example1Loss loss, int lambda_points) {
  const double lo = 1e-6, hi = 0.5;
  Example1Result out;
  out.theta_closed =
      grid_then_golden([&](double t) { return example1_objective(t, scheme, loss); }, lo, hi, 501, 1e-12)
          .x;
  out.theta_quadrature = grid_then_golden(
                             [&](double t) {
                               return example1_objective_quadrature(t, scheme, lambda_points, loss);
                             },
                             lo, hi, 501, 1e-10)
                             .x;
  return out;
}

// Example 3 ---------------------------------------------------------------------

void Example3Params::validate() const {
  if (!(r > 0.0)) throw ConfigError("r must be > 0");
  if (n < 1) throw ConfigError("n must be >= 1");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
  // The Beta density is unbounded at the ends below 1, which the quadrature cannot take.
  if (!(alpha >= 1.0)) throw ConfigError("alpha must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("tol must be > 0");
}

namespace {

double beta_pdf(double lam, double alpha) {
  if (alpha == 1.0) return 1.0;
  if (lam <= 0.0 || lam >= 1.0) return 0.0;
  const double log_b = 2.0 * std::lgamma(alpha) - std::lgamma(2.0 * alpha);
  return std::exp((alpha - 1.0) * (std::log(lam) + std::log1p(-lam)) - log_b);
}

double integrate_split(const std::function<double(double)>& f, double tol) {
  return integrate(f, 0.0, 0.5, tol) + integrate(f, 0.5, 1.0, tol);
}

}  // namespace

double example3_loss(Example3Scheme scheme, double phi, const Example3Params& p) {
  p.validate();
  const double c = p.r * std::cos(phi), s = p.r * std::sin(phi);
  const double n = p.n;
  if (scheme == Example3Scheme::vanilla) return (n + 1.0) * softplus(-c) + softplus(-s);

  const auto rho = [&](double lam) {
    return scheme == Example3Scheme::mixup ? lam : logistic((lam - 0.5) / (p.sigma * p.sigma));
  };
  const auto w = [&](double lam) { return beta_pdf(lam, p.alpha); };
  // Cross-class pair (x2, x_k).
  const auto L1 = [&](double lam) {
    const double q = rho(lam), z = lam * c - (1.0 - lam) * s;
    return w(lam) * ((1.0 - q) * softplus(z) + q * softplus(-z));
  };
  // Cross-class pair (x1, x_k).
  const auto L2 = [&](double lam) {
    const double q = rho(lam), z = (2.0 * lam - 1.0) * c;
    return w(lam) * ((1.0 - q) * softplus(z) + q * softplus(-z));
  };
  // Same-class pair (x1, x2); every labeling gives +1.
  const auto L3 = [&](double lam) { return w(lam) * softplus(-(1.0 - lam) * c - lam * s); };

  const double i1 = integrate_split(L1, p.tol);
  const double i2 = integrate_split(L2, p.tol);
  const double i3 = integrate_split(L3, p.tol);
  return 2.0 * n * (i1 + i2) + n * n * softplus(-c) + 2.0 * i3 + softplus(-c) + softplus(-s);
}

PhiStar example3_phi_star(Example3Scheme scheme, const Example3Params& p, int grid_points) {
  p.validate();
  const double half_pi = std::numbers::pi / 2.0;
  const double pad = half_pi / (grid_points + 1);
  const auto m = grid_then_golden([&](double phi) { return example3_loss(scheme, phi, p); }, pad,
                                  half_pi - pad, grid_points, 1e-9);
  return {m.x, m.value};
}

ToyLossCurve example3_curve(const Example3Params& p, int points, int jobs) {
  p.validate();
  if (points < 2) throw ConfigError("curve needs at least 2 points");
  ToyLossCurve out;
  out.r = p.r;
  const auto m = static_cast<size_t>(points);
  out.phi.resize(m);
  out.vanilla.resize(m);
  out.mixup.resize(m);
  out.genlabel.resize(m);
  const double half_pi = std::numbers::pi / 2.0;
  parallel_for(m, jobs, [&](size_t k) {
    const double phi = half_pi * (static_cast<double>(k) + 0.5) / points;
    out.phi[k] = phi;
    out.vanilla[k] = example3_loss(Example3Scheme::vanilla, phi, p);
    out.mixup[k] = example3_loss(Example3Scheme::mixup, phi, p);
    out.genlabel[k] = example3_loss(Example3Scheme::genlabel, phi, p);
  });
  return out;
}

std::string to_csv(const ToyLossCurve& c) {
  std::ostringstream os;
  os << "phi,vanilla,mixup,genlabel\n";
  for (size_t k = 0; k < c.phi.size(); ++k)
    os << format_real(c.phi[k]) << ',' << format_real(c.vanilla[k]) << ',' << format_real(c.mixup[k])
       << ',' << format_real(c.genlabel[k]) << '\n';
  return os.str();
}

// Coefficients --------------------------------------------------------------------

double c_d(double tau, int d) {
  return (1.0 / (1.0 - tau)) * ((d - 2) * tau + 1.0) / ((d - 1) * tau + 1.0);
}

double asymptotic_A(double c) { return (c * c + 1.0) / (2.0 * (c + 1.0) * (c + 1.0)); }
double asymptotic_B(double c) { return (c * c - c + 1.0) / (3.0 * (c + 1.0) * (c + 1.0)); }

void TheoryParams::validate() const {
  if (d < 2) throw ConfigError("d must be >= 2");
  if (!(sigma1 > 0.0)) throw ConfigError("sigma1 must be > 0");
  const double r3 = std::sqrt(3.0);
  if (!(c > 2.0 - r3 && c < 2.0 + r3)) throw ConfigError("c must lie in (2 - sqrt 3, 2 + sqrt 3)");
  if (!(tau > -1.0 && tau < 1.0)) throw ConfigError("tau must lie in (-1, 1)");
  const auto near = [](double a, double b) { return std::abs(a - b) < 1e-12; };
  if (near(tau, -1.0 / (d - 1))) throw ConfigError("tau = -1/(d-1) makes Sigma singular");
  if (d > 2 && near(tau, -1.0 / (d - 2))) throw ConfigError("tau = -1/(d-2) is excluded");
  if (!(A >= 0.0) || !(B >= 0.0)) throw ConfigError("A and B must be >= 0");
}

TheoryParams make_theory_params(double c, double tau, int d, double sigma1) {
  TheoryParams p;
  p.c = c;
  p.tau = tau;
  p.d = d;
  p.sigma1 = sigma1;
  p.A = 0.0;
  p.B = 0.0;
  p.validate();
  p.A = asymptotic_A(c);
  p.B = asymptotic_B(c);
  return p;
}

AbEstimate estimate_AB(const TheoryParams& p, int samples, std::uint64_t seed) {
  p.validate();
  if (samples < 2) throw ConfigError("samples must be >= 2");
  const int d = p.d;
  MatrixXd sigma = MatrixXd::Constant(d, d, p.tau);
  sigma.diagonal().setOnes();
  const Eigen::LLT<MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw NumericalError("Sigma is not positive definite");
  const MatrixXd L = llt.matrixL();
  const double s1 = p.sigma1, s2 = p.c * p.sigma1;
  VectorXd mu_p = VectorXd::Zero(d), mu_q = VectorXd::Zero(d);
  mu_p(0) = -1.0;
  mu_q(0) = 1.0;

  Rng rng = make_rng(seed, "theory-ab");
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  double sa = 0, sa2 = 0, sb = 0, sb2 = 0;
  VectorXd zi(d), zj(d);
  for (int k = 0; k < samples; ++k) {
    for (int t = 0; t < d; ++t) zi(t) = normal(rng);
    for (int t = 0; t < d; ++t) zj(t) = normal(rng);
    const double lam = unif(rng);
    const VectorXd xi = mu_p + L * zi / s1;
    const VectorXd xj = mu_q + L * zj / s2;
    const VectorXd x = lam * xi + (1.0 - lam) * xj;
    const double mp = L.triangularView<Eigen::Lower>().solve(x - mu_p).squaredNorm();
    const double mq = L.triangularView<Eigen::Lower>().solve(x - mu_q).squaredNorm();
    // Shared constants cancel; only the scale terms differ.
    const double log_p = -0.5 * s1 * s1 * mp + d * std::log(s1);
    const double log_q = -0.5 * s2 * s2 * mq + d * std::log(s2);
    const double l1 = logistic(log_p - log_q);
    const double a = l1 * (1.0 - lam) + (1.0 - l1) * lam;
    const double b = l1 * (1.0 - lam) * (1.0 - lam) + (1.0 - l1) * lam * lam;
    sa += a;
    sa2 += a * a;
    sb += b;
    sb2 += b * b;
  }
  const double n = samples;
  AbEstimate out;
  out.A = sa / n;
  out.B = sb / n;
  out.A_stderr = std::sqrt(std::max(0.0, sa2 / n - out.A * out.A) / (n - 1.0));
  out.B_stderr = std::sqrt(std::max(0.0, sb2 / n - out.B * out.B) / (n - 1.0));
  return out;
}

// Taylor losses -----------------------------------------------------------------------

namespace {

VectorXd binary_targets(const Dataset& S) {
  if (S.class_count != 2) throw ConfigError("the Taylor losses need a two-class dataset");
  VectorXd y(S.size());
  for (Eigen::Index i = 0; i < S.size(); ++i) y(i) = S.label_of(i) == 0 ? 1.0 : 0.0;
  return y;
}

bool all_admissible(const VectorXd& f, const VectorXd& y) {
  for (Eigen::Index i = 0; i < f.size(); ++i)
    if ((2.0 * y(i) - 1.0) * f(i) < 0.0) return false;
  return true;
}

VectorXd net_outputs(const Mlp<double>& net, const MatrixXd& x) {
  if (net.output_dim() != 1) throw ConfigError("the Taylor losses need a single-output network");
  return forward_batch(net, x).col(0);
}

// f: outputs, grads: n x d rows of grad f(x_i), curvature_scale: factor on the
// second-order adversarial term (1 for logreg, d for ReLU nets).
TaylorLosses assemble(const TheoryParams& p, const VectorXd& f, const MatrixXd& grads,
                      const VectorXd& y, const MatrixXd& X, double curvature_scale) {
  const Eigen::Index n = X.rows();
  const VectorXd mean = X.colwise().mean().transpose();
  const MatrixXd centred = X.rowwise() - mean.transpose();
  const MatrixXd cov = centred.transpose() * centred / static_cast<double>(n);

  TaylorLosses out;
  double l_std = 0.0, r1 = 0.0, r2 = 0.0, adv1 = 0.0, adv2 = 0.0;
  out.R = std::numeric_limits<double>::infinity();
  out.c_x = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const VectorXd xi = X.row(i).transpose();
    const VectorXd gi = grads.row(i).transpose();
    const double g = logistic(f(i));
    const double h2 = g * (1.0 - g);
    l_std += softplus(f(i)) - y(i) * f(i);
    const VectorXd shift = mean - xi;
    r1 += (g - y(i)) * gi.dot(shift);
    r2 += h2 * (gi.dot(cov * gi) + gi.dot(shift) * gi.dot(shift));
    const double gn = gi.norm();
    adv1 += std::abs(g - y(i)) * gn;
    adv2 += h2 * gn * gn;
    const double xn = xi.norm();
    out.c_x = std::min(out.c_x, xn);
    out.R = std::min(out.R, gn > 0.0 && xn > 0.0 ? std::abs(gi.dot(xi)) / (gn * xn) : 0.0);
  }
  const double dn = static_cast<double>(n);
  l_std /= dn;
  r1 /= dn;
  r2 /= 2.0 * dn;
  adv1 /= dn;
  adv2 /= dn;
  out.L_std = l_std;
  out.L_mix = l_std + kMixupA * r1 + kMixupB * r2;
  out.L_gen = l_std + p.A * r1 + p.B * r2;
  out.delta_gen = out.R * out.c_x * p.A;
  const double dl = out.delta_gen;
  out.L_adv = l_std + dl * adv1 + 0.5 * dl * dl * curvature_scale * adv2;
  return out;
}

}  // namespace

bool admissible(const VectorXd& theta, const Dataset& S) {
  if (theta.size() != S.dim()) throw ConfigError("theta dimension does not match data");
  return all_admissible(S.features * theta, binary_targets(S));
}

bool admissible(const Mlp<double>& net, const Dataset& S) {
  return all_admissible(net_outputs(net, S.features), binary_targets(S));
}

TaylorLosses taylor_losses(const TheoryParams& params, const VectorXd& theta, const Dataset& S) {
  params.validate();
  if (theta.size() != S.dim()) throw ConfigError("theta dimension does not match data");
  const VectorXd y = binary_targets(S);
  const VectorXd f = S.features * theta;
  if (!all_admissible(f, y)) throw ConfigError("theta is outside the admissible set");
  const MatrixXd grads = theta.transpose().replicate(S.size(), 1);
  return assemble(params, f, grads, y, S.features, 1.0);
}

TaylorLosses taylor_losses(const TheoryParams& params, const Mlp<double>& net, const Dataset& S) {
  params.validate();
  if (net.use_bias) throw ConfigError("the ReLU analysis needs a bias-free network");
  const VectorXd y = binary_targets(S);
  const VectorXd f = net_outputs(net, S.features);
  if (!all_admissible(f, y)) throw ConfigError("network is outside the admissible set");
  const MatrixXd grads = logit_input_gradient(net, S.features, 0);
  return assemble(params, f, grads, y, S.features, static_cast<double>(S.dim()));
}

Dataset gaussian_pair(int per_class, double variance, std::uint64_t seed) {
  if (per_class < 1) throw ConfigError("per_class must be >= 1");
  if (!(variance > 0.0)) throw ConfigError("variance must be > 0");
  Rng rng = make_rng(seed, "data");
  std::normal_distribution<double> normal(0.0, std::sqrt(variance));
  MatrixXd x(2 * per_class, 2);
  std::vector<int> cls(static_cast<size_t>(2 * per_class));
  for (int i = 0; i < 2 * per_class; ++i) {
    const int c = i < per_class ? 0 : 1;
    x(i, 0) = (c == 0 ? 1.0 : -1.0) + normal(rng);
    x(i, 1) = normal(rng);
    cls[static_cast<size_t>(i)] = c;
  }
  return make_dataset(std::move(x), cls, 2, "gaussian-pair");
}

Mlp<double> random_admissible_relu(const Dataset& S, const std::vector<int>& hidden, Rng& rng,
                                   int max_tries) {
  for (int t = 0; t < max_tries; ++t) {
    Mlp<double> net = make_mlp<double>(S.dim(), hidden, 1, false, rng);
    if (admissible(net, S)) return net;
    net.weights.back() *= -1.0;
    if (admissible(net, S)) return net;
  }
  throw NumericalError("no admissible random network found");
}

namespace {

Mlp<double> rotated(const Mlp<double>& base, double phi, double radius) {
  Mlp<double> net = base;
  Eigen::Matrix2d rot;
  rot << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  // f_phi(x) = f(R(phi)^T x): the decision structure turns by phi.
  net.weights.front() = base.weights.front() * rot.transpose();
  MatrixXd e1 = MatrixXd::Zero(1, 2);
  e1(0, 0) = 1.0;
  const double gn = logit_input_gradient(net, e1, 0).row(0).norm();
  if (gn > 0.0) net.weights.back() *= radius / gn;
  return net;
}

}  // namespace

ChainReport verify_inequality_chain(const TheoryParams& params, const ChainSetup& setup) {
  params.validate();
  if (setup.phi_points < 1) throw ConfigError("phi_points must be >= 1");
  if (!(setup.radius > 0.0)) throw ConfigError("radius must be > 0");
  const Dataset S = gaussian_pair(setup.per_class, setup.variance, setup.seed);
  std::optional<Mlp<double>> base;
  if (setup.model == TheoryModel::relu_mlp) {
    Rng rng = make_rng(setup.seed, "init");
    base = random_admissible_relu(S, setup.hidden, rng, setup.max_init_tries);
  }

  std::vector<ChainPoint> points(static_cast<size_t>(setup.phi_points));
  parallel_for(points.size(), setup.jobs, [&](size_t k) {
    ChainPoint& pt = points[k];
    pt.phi = setup.phi_points == 1
                 ? setup.phi_lo
                 : setup.phi_lo + (setup.phi_hi - setup.phi_lo) * static_cast<double>(k) /
                                      (setup.phi_points - 1);
    if (setup.model == TheoryModel::logreg) {
      VectorXd theta(2);
      theta << setup.radius * std::cos(pt.phi), setup.radius * std::sin(pt.phi);
      pt.admissible = admissible(theta, S);
      if (pt.admissible) pt.losses = taylor_losses(params, theta, S);
    } else {
      const Mlp<double> net = rotated(*base, pt.phi, setup.radius);
      pt.admissible = admissible(net, S);
      if (pt.admissible) pt.losses = taylor_losses(params, net, S);
    }
    if (pt.admissible) {
      pt.mix_gt_gen = pt.losses.L_mix > pt.losses.L_gen;
      pt.gen_ge_adv = pt.losses.L_gen >= pt.losses.L_adv;
    }
  });

  ChainReport rep;
  rep.min_slack_mix_gen = std::numeric_limits<double>::infinity();
  rep.min_slack_gen_adv = std::numeric_limits<double>::infinity();
  for (const ChainPoint& pt : points) {
    if (!pt.admissible) {
      ++rep.excluded_count;
      continue;
    }
    ++rep.admissible_count;
    if (pt.holds()) ++rep.holding_count;
    rep.min_slack_mix_gen = std::min(rep.min_slack_mix_gen, pt.losses.L_mix - pt.losses.L_gen);
    rep.min_slack_gen_adv = std::min(rep.min_slack_gen_adv, pt.losses.L_gen - pt.losses.L_adv);
  }
  rep.points = std::move(points);
  return rep;
}

std::string to_csv(const ChainReport& r) {
  std::ostringstream os;
  os << "phi,admissible,L_std,L_mix,L_gen,L_adv,delta_gen,holds\n";
  for (const auto& p : r.points) {
    os << format_real(p.phi) << ',' << (p.admissible ? 1 : 0);
    if (p.admissible)
      os << ',' << format_real(p.losses.L_std) << ',' << format_real(p.losses.L_mix) << ','
         << format_real(p.losses.L_gen) << ',' << format_real(p.losses.L_adv) << ','
         << format_real(p.losses.delta_gen) << ',' << (p.holds() ? 1 : 0);
    else
      os << ",,,,,,0";
    os << '\n';
  }
  return os.str();
}

}  // namespace genlabel
