#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "npeflow/rng.hpp"

// Synthetic generative models used by the experiments. The toy model has a
// tractable posterior (computed by quadrature to spectral accuracy); the
// clustering model exposes its log joint and gradient for likelihood-based
// baselines while the forward-KL trainer only ever touches the joint sampler.

namespace npeflow::models {

// ---------------------------------------------------------------------------
// Toy rotation model: theta ~ U[0, 2pi), z ~ N(0, sigma^2),
// x = (cos(theta+z), sin(theta+z)) on the unit circle.
// ---------------------------------------------------------------------------

struct ToyRotationModel {
  double sigma = 0.5;   // rotation noise std
  int wrap_terms = 10;  // wrapped-normal terms on each side
  int grid_size = 2048; // quadrature points for the posterior oracle
};

struct ToyDraw {
  double theta;
  std::array<double, 2> x;
};

ToyDraw toy_sample_joint(const ToyRotationModel& model, Rng& rng);

// log p(x | theta): wrapped-normal density of the angle of x minus theta,
// with respect to arc length on the circle. Requires |x| = 1 within 1e-9.
double toy_log_likelihood(const ToyRotationModel& model, double theta,
                          std::array<double, 2> x);

struct ToyPosterior {
  std::vector<double> grid;      // equispaced angles in [0, 2pi)
  std::vector<double> log_post;  // normalized log posterior on the grid
  std::array<double, 2> moments; // E[cos theta], E[sin theta] under posterior
  double log_normalizer;         // log of integral of likelihood d theta
};

// Periodic-trapezoid quadrature posterior; spectrally accurate for this
// smooth periodic integrand.
ToyPosterior toy_posterior_oracle(const ToyRotationModel& model,
                                  std::array<double, 2> x);

// Exact log posterior density at theta (uniform prior cancels):
// log p(theta | x) = log p(x | theta) - log integral of p(x | .).
double toy_log_posterior(const ToyRotationModel& model, double theta,
                         std::array<double, 2> x);

// ---------------------------------------------------------------------------
// Hierarchical clustering model:
//   S ~ N(0, prior_s_std^2), Z_j ~ N(mu_j + S, sigma^2) independently,
//   X_i ~ sum_j w_j N(Z_j, tau^2), i = 1..n_obs (scalar observations).
// ---------------------------------------------------------------------------

struct ClusteringModel {
  std::vector<double> mu = {-20.0, -10.0, 0.0, 10.0, 20.0};
  std::vector<double> weights;  // empty -> uniform
  double sigma = 0.5;
  double tau = 0.1;
  double prior_s_std = 100.0;
  int n_obs = 1000;

  int dim() const { return static_cast<int>(mu.size()); }
};

// Throws std::invalid_argument on non-positive scales, bad weight vector, or
// empty component list.
void validate_model(const ClusteringModel& model);

struct ClusteringDraw {
  double s;
  std::vector<double> z;   // dim()
  std::vector<double> xs;  // n_obs
};

ClusteringDraw clustering_sample_joint(const ClusteringModel& model, Rng& rng);

// Same, but with the top-level S pinned (used for evaluation datasets).
ClusteringDraw clustering_sample_joint_fixed_s(const ClusteringModel& model,
                                               double s, Rng& rng);

// log p(s, z, xs) under the model.
double clustering_log_joint(const ClusteringModel& model, double s,
                            std::span<const double> z,
                            std::span<const double> xs);

// d log p / d s and d log p / d z_j at (s, z, xs).
void clustering_log_joint_grad(const ClusteringModel& model, double s,
                               std::span<const double> z,
                               std::span<const double> xs, double& ds,
                               std::span<double> dz);

// One observation per line under a "x" header; model, latents, and seed go
// to <path>.meta.json so a dataset is reproducible from disk alone.
void save_dataset_csv(const ClusteringModel& model, const ClusteringDraw& draw,
                      const std::string& path, std::uint64_t seed);
ClusteringDraw load_dataset_csv(const std::string& path,
                                ClusteringModel* model_out = nullptr);

}  // namespace npeflow::models
