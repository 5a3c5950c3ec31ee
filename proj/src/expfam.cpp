#include "npeflow/expfam.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "npeflow/bessel.hpp"

namespace npeflow::expfam {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

void check_dim(FamilyKind kind, std::span<const double> eta) {
  if (static_cast<int>(eta.size()) != param_dim(kind))
    throw std::invalid_argument("expfam: eta has wrong length");
}

double vm_kappa(std::span<const double> eta) {
  return std::hypot(eta[0], eta[1]);
}

// Gaussian natural -> (mean, variance).
void gn_moments(std::span<const double> eta, double& mu, double& var) {
  var = -0.5 / eta[1];
  mu = eta[0] * var;
}

// Best/Fisher wrapped-Cauchy rejection sampler for the von Mises
// distribution; exact, expected acceptance ~ 66% for all kappa.
double sample_von_mises(double mu0, double kappa, Rng& rng) {
  if (kappa < 1e-8) return randu(rng) * kTwoPi;  // indistinguishable from uniform
  const double a = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
  const double b = (a - std::sqrt(2.0 * a)) / (2.0 * kappa);
  const double r = (1.0 + b * b) / (2.0 * b);
  double f = 0.0;
  for (;;) {
    const double u1 = randu(rng);
    const double z = std::cos(3.14159265358979323846 * u1);
    f = (1.0 + r * z) / (r + z);
    const double c = kappa * (r - f);
    const double u2 = randu(rng);
    if (c * (2.0 - c) - u2 > 0.0) break;
    if (std::log(c / u2) + 1.0 - c >= 0.0) break;
  }
  const double u3 = randu(rng);
  double theta = mu0 + (u3 > 0.5 ? 1.0 : -1.0) * std::acos(f);
  theta = std::fmod(theta, kTwoPi);
  if (theta < 0.0) theta += kTwoPi;
  return theta;
}

}  // namespace

int param_dim(FamilyKind kind) {
  return kind == FamilyKind::GaussianMeanOnly ? 1 : 2;
}

bool validate(FamilyKind kind, std::span<const double> eta) {
  check_dim(kind, eta);
  for (double v : eta)
    if (!std::isfinite(v)) return false;
  switch (kind) {
    case FamilyKind::GaussianMeanOnly:
      return true;
    case FamilyKind::GaussianNatural:
      return eta[1] < 0.0;
    case FamilyKind::VonMisesNatural:
      return eta[0] != 0.0 || eta[1] != 0.0;
  }
  return false;
}

void require_valid(FamilyKind kind, std::span<const double> eta) {
  if (validate(kind, eta)) return;
  std::ostringstream msg;
  msg << "expfam: eta outside natural domain: (";
  for (size_t i = 0; i < eta.size(); ++i) msg << (i ? ", " : "") << eta[i];
  msg << ")";
  throw std::domain_error(msg.str());
}

bool theta_in_support(FamilyKind kind, double theta) {
  if (!std::isfinite(theta)) return false;
  if (kind == FamilyKind::VonMisesNatural)
    return theta >= 0.0 && theta <= kTwoPi;
  return true;
}

void sufficient_stats(FamilyKind kind, double theta, std::span<double> out) {
  switch (kind) {
    case FamilyKind::GaussianMeanOnly:
      out[0] = theta;
      return;
    case FamilyKind::GaussianNatural:
      out[0] = theta;
      out[1] = theta * theta;
      return;
    case FamilyKind::VonMisesNatural:
      out[0] = std::cos(theta);
      out[1] = std::sin(theta);
      return;
  }
}

double log_partition(FamilyKind kind, std::span<const double> eta) {
  require_valid(kind, eta);
  switch (kind) {
    case FamilyKind::GaussianMeanOnly:
      return 0.5 * eta[0] * eta[0];
    case FamilyKind::GaussianNatural:
      // -eta1^2/(4 eta2) - (1/2) log(-2 eta2)
      return -eta[0] * eta[0] / (4.0 * eta[1]) - 0.5 * std::log(-2.0 * eta[1]);
    case FamilyKind::VonMisesNatural:
      return bessel::log_i0(vm_kappa(eta));
  }
  return 0.0;
}

void grad_log_partition(FamilyKind kind, std::span<const double> eta,
                        std::span<double> out) {
  require_valid(kind, eta);
  switch (kind) {
    case FamilyKind::GaussianMeanOnly:
      out[0] = eta[0];
      return;
    case FamilyKind::GaussianNatural: {
      double mu, var;
      gn_moments(eta, mu, var);
      out[0] = mu;
      out[1] = mu * mu + var;
      return;
    }
    case FamilyKind::VonMisesNatural: {
      const double kappa = vm_kappa(eta);
      const double rok = bessel::ratio_i1_i0_over_x(kappa);  // r(kappa)/kappa
      out[0] = rok * eta[0];
      out[1] = rok * eta[1];
      return;
    }
  }
}

void hessian_log_partition(FamilyKind kind, std::span<const double> eta,
                           std::span<double> out) {
  require_valid(kind, eta);
  switch (kind) {
    case FamilyKind::GaussianMeanOnly:
      out[0] = 1.0;
      return;
    case FamilyKind::GaussianNatural: {
      double mu, var;
      gn_moments(eta, mu, var);
      out[0] = var;
      out[1] = out[2] = 2.0 * mu * var;
      out[3] = 4.0 * mu * mu * var + 2.0 * var * var;
      return;
    }
    case FamilyKind::VonMisesNatural: {
      // r'(k) u u^T + (r(k)/k) (I - u u^T) with u = eta/k; both eigenvalues
      // are positive on the domain, so the Hessian is positive definite.
      const double kappa = vm_kappa(eta);
      const double rp = bessel::ratio_i1_i0_prime(kappa);
      const double rok = bessel::ratio_i1_i0_over_x(kappa);
      const double u0 = eta[0] / kappa, u1 = eta[1] / kappa;
      out[0] = rp * u0 * u0 + rok * (1.0 - u0 * u0);
      out[1] = out[2] = (rp - rok) * u0 * u1;
      out[3] = rp * u1 * u1 + rok * (1.0 - u1 * u1);
      return;
    }
  }
}

double log_density(FamilyKind kind, std::span<const double> eta, double theta) {
  if (!theta_in_support(kind, theta)) {
    std::ostringstream msg;
    msg << "expfam: theta=" << theta << " outside support";
    throw std::domain_error(msg.str());
  }
  const double a = log_partition(kind, eta);  // validates eta
  switch (kind) {
    case FamilyKind::GaussianMeanOnly:
      return -0.5 * kLogTwoPi - 0.5 * theta * theta + eta[0] * theta - a;
    case FamilyKind::GaussianNatural:
      return -0.5 * kLogTwoPi + eta[0] * theta + eta[1] * theta * theta - a;
    case FamilyKind::VonMisesNatural:
      return -std::log(kTwoPi) + eta[0] * std::cos(theta) +
             eta[1] * std::sin(theta) - a;
  }
  return 0.0;
}

void grad_log_density_eta(FamilyKind kind, std::span<const double> eta,
                          double theta, std::span<double> out) {
  if (!theta_in_support(kind, theta))
    throw std::domain_error("expfam: theta outside support");
  grad_log_partition(kind, eta, out);  // validates eta
  double t[2];
  sufficient_stats(kind, theta, {t, static_cast<size_t>(param_dim(kind))});
  for (int k = 0; k < param_dim(kind); ++k) out[k] = t[k] - out[k];
}

double sample(FamilyKind kind, std::span<const double> eta, Rng& rng) {
  require_valid(kind, eta);
  switch (kind) {
    case FamilyKind::GaussianMeanOnly:
      return eta[0] + randn(rng);
    case FamilyKind::GaussianNatural: {
      double mu, var;
      gn_moments(eta, mu, var);
      return mu + std::sqrt(var) * randn(rng);
    }
    case FamilyKind::VonMisesNatural: {
      const double kappa = vm_kappa(eta);
      const double mu0 = std::atan2(eta[1], eta[0]);
      return sample_von_mises(mu0, kappa, rng);
    }
  }
  return 0.0;
}

double mode(FamilyKind kind, std::span<const double> eta) {
  require_valid(kind, eta);
  switch (kind) {
    case FamilyKind::GaussianMeanOnly:
      return eta[0];
    case FamilyKind::GaussianNatural:
      return -eta[0] / (2.0 * eta[1]);
    case FamilyKind::VonMisesNatural: {
      double a = std::atan2(eta[1], eta[0]);
      if (a < 0.0) a += kTwoPi;
      return a;
    }
  }
  return 0.0;
}

}  // namespace npeflow::expfam
