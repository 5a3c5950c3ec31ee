#pragma once

#include <span>

#include "npeflow/rng.hpp"

// Scalar exponential families in natural parameterization:
//   q(theta; eta) = h(theta) exp(eta . T(theta) - A(eta)).
// Three members: a unit-variance Gaussian with free mean, a full Gaussian in
// natural coordinates, and a von Mises family on [0, 2pi). All derivatives of
// the log partition are closed-form; sampling is exact (no MCMC).

namespace npeflow::expfam {

enum class FamilyKind {
  GaussianMeanOnly,  // T = theta,            eta in R,   q = 1
  GaussianNatural,   // T = (theta, theta^2), eta2 < 0,   q = 2
  VonMisesNatural,   // T = (cos, sin),       eta != 0,   q = 2
};

// Natural parameter dimension q.
int param_dim(FamilyKind kind);

// True iff eta lies in the open natural domain.
bool validate(FamilyKind kind, std::span<const double> eta);

// Throws std::domain_error with the offending value if validate fails.
void require_valid(FamilyKind kind, std::span<const double> eta);

bool theta_in_support(FamilyKind kind, double theta);

// T(theta); out has length q.
void sufficient_stats(FamilyKind kind, double theta, std::span<double> out);

// A(eta).
double log_partition(FamilyKind kind, std::span<const double> eta);

// grad A(eta) = E[T]; out has length q.
void grad_log_partition(FamilyKind kind, std::span<const double> eta,
                        std::span<double> out);

// hess A(eta) = Cov[T]; out is q*q row-major. Positive definite on the domain.
void hessian_log_partition(FamilyKind kind, std::span<const double> eta,
                           std::span<double> out);

// log q(theta; eta) including the base measure. Throws if theta is outside
// the support or eta is invalid.
double log_density(FamilyKind kind, std::span<const double> eta, double theta);

// d/d eta log q(theta; eta) = T(theta) - grad A(eta); out has length q.
void grad_log_density_eta(FamilyKind kind, std::span<const double> eta,
                          double theta, std::span<double> out);

// Exact ancestral draw from q(.; eta).
double sample(FamilyKind kind, std::span<const double> eta, Rng& rng);

// argmax_theta q(theta; eta). Von Mises result is reduced to [0, 2pi).
double mode(FamilyKind kind, std::span<const double> eta);

}  // namespace npeflow::expfam
