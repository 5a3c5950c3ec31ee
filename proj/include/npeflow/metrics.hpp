#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "npeflow/expfam.hpp"
#include "npeflow/models.hpp"
#include "npeflow/rng.hpp"

// Evaluation metrics: held-out negative log likelihood of the variational
// posterior, the exact-posterior reference value, self-normalized importance
// sampling estimates of the forward KL, clustering summaries, and a small
// Gaussian KDE for mode diagnostics.

namespace npeflow::metrics {

// Held-out set from the toy model (latents kept for NLL scoring).
struct ToyEvalSet {
  std::vector<double> thetas;
  std::vector<std::array<double, 2>> xs;
};
ToyEvalSet make_toy_evalset(const models::ToyRotationModel& model, int n,
                            Rng& rng);

// Mean over the set of -log q(theta*; map(encode(x*))).
double heldout_nll(
    const std::function<void(const double* x, double* eta)>& encode_eta,
    expfam::FamilyKind family, const ToyEvalSet& eval);

// Same score under the exact posterior: mean of -log p(theta* | x*).
double exact_posterior_nll(const models::ToyRotationModel& model,
                           const ToyEvalSet& eval);

// Self-normalized importance sampling estimate of
//   KL(p(.|x) || q) = E_p[log p(.|x) - log q]
// with the PRIOR as proposal (weights = likelihood). Generic over densities.
struct SnisResult {
  double kl = 0.0;
  double ess = 0.0;    // effective sample size of the normalized weights
  double log_z = 0.0;  // log normalizer estimate
};
SnisResult snis_forward_kl(
    const std::function<double(Rng&)>& prior_sampler,
    const std::function<double(double)>& log_prior,
    const std::function<double(double)>& log_likelihood,
    const std::function<double(double)>& log_q, int n_draws, Rng& rng);

// Toy-model convenience wrapper (uniform prior on [0, 2pi)).
SnisResult toy_snis_forward_kl(const models::ToyRotationModel& model,
                               std::array<double, 2> x,
                               expfam::FamilyKind family,
                               std::span<const double> eta, int n_draws,
                               Rng& rng);

// Quadrature reference for the same KL (oracle; grid from the model).
double toy_quadrature_kl(const models::ToyRotationModel& model,
                         std::array<double, 2> x, expfam::FamilyKind family,
                         std::span<const double> eta);

// Clustering report: posterior mode of S, l1 error of the Z means against
// the true latents, and whether the Z means are strictly increasing.
struct ClusteringReport {
  double mode_s = 0.0;
  double z_l1 = 0.0;
  bool z_ordered = false;
};
ClusteringReport clustering_report(expfam::FamilyKind family,
                                   std::span<const double> eta_s,
                                   std::span<const double> eta_z,
                                   std::span<const double> z_true);

// Gaussian KDE on a uniform grid; bandwidth <= 0 selects Silverman's rule
// 0.9 min(sd, iqr/1.34) n^{-1/5}.
struct KdeCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
};
KdeCurve kde_curve(std::span<const double> values, double bandwidth = 0.0,
                   int grid_points = 256);

}  // namespace npeflow::metrics
