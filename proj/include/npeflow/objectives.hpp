#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "npeflow/expfam.hpp"
#include "npeflow/models.hpp"
#include "npeflow/nets.hpp"
#include "npeflow/rng.hpp"

// Training objectives and the optimizer loop.
//
// The forward-KL estimator sees the generative model only through a joint
// sampler (latent, observation) — it never evaluates a likelihood or joint
// density. The likelihood-based baselines (ELBO / importance-weighted bound)
// live behind a separate interface that does take log-joint callbacks.

namespace npeflow::objectives {

// ---------------------------------------------------------------------------
// Forward-KL gradient: for a batch of ancestral draws (theta_i, x_i),
//   grad = (1/B) sum_i d/dphi [ -log q(theta_i; map(f(x_i; phi))) ].
// Returns the batch mean of -log q (the sampled cross-entropy loss).
// ---------------------------------------------------------------------------

struct JointSample {
  std::vector<double> latent;  // sufficient for log q evaluation
  std::vector<double> obs;     // encoder input
};
using JointSampler = std::function<JointSample(Rng&)>;

// Encoder access used by the estimator; raw output length = map_out_dim.
struct EncoderRef {
  int raw_dim = 0;
  size_t param_count = 0;
  std::function<void(const double* obs, size_t obs_len, double* raw)> forward;
  // Batch-averaged gradient of sum_i g_i . raw_i; overwrites grad.
  std::function<void(const std::vector<JointSample>& batch,
                     const std::vector<double>& gs, std::span<double> grad)>
      backprop;
};

// Scalar-latent case (latent.size() == 1), e.g. the toy rotation posterior.
double fkl_gradient_estimate(const JointSampler& sampler, const EncoderRef& enc,
                             const nets::OutputMap& map, int batch, Rng& rng,
                             std::span<double> grad);

// Ready-made encoder refs for the concrete networks.
EncoderRef encoder_ref(nets::TwoLayerNet& net);
EncoderRef encoder_ref(nets::LinearizedNet& lin);

// ---------------------------------------------------------------------------
// Clustering posterior q(s, z | xs) = q(s) prod_j q(z_j), all factors from
// one Gaussian family; amortized via two set encoders (one for S, one
// emitting all Z factors). FKL gradient in one call.
// ---------------------------------------------------------------------------

struct ClusteringEncoders {
  nets::DeepSetEncoder enc_s;  // out: qf
  nets::DeepSetEncoder enc_z;  // out: dim * qf
  nets::OutputMap map;         // family of every factor
  nets::DeepSetWorkspace ws_s, ws_z;  // reused across steps
};

// Returns batch-mean -log q(s, z); grad blocks are overwritten.
double clustering_fkl_gradient(const models::ClusteringModel& model,
                               ClusteringEncoders& encs, int batch, Rng& rng,
                               std::span<double> grad_s,
                               std::span<double> grad_z);

// Likelihood-bound twin of clustering_fkl_gradient: simulates one dataset
// from the model per call, encodes it, and takes the pathwise gradient of
// the NEGATIVE K-sample importance-weighted bound through the encoders, so
// the same minimizing train loop maximizes the bound. Returns -bound; grad
// blocks are overwritten. Gaussian families only (reparameterizable).
double clustering_iwbo_gradient(const models::ClusteringModel& model,
                                ClusteringEncoders& encs, int k_samples,
                                Rng& rng, std::span<double> grad_s,
                                std::span<double> grad_z);

// ---------------------------------------------------------------------------
// Likelihood-based baselines on a FIXED dataset xs: pathwise gradients of the
// ELBO / importance-weighted bound with respect to the natural parameters of
// q(s) and the dim mean-field factors q(z_j). Includes the score correction
// so the gradient is exact for finite samples (finite-difference testable
// under a common seed). Supported families: GaussianMeanOnly,
// GaussianNatural.
// ---------------------------------------------------------------------------

struct BoundResult {
  double value = 0.0;             // bound estimate (higher is better)
  std::vector<double> d_eta_s;    // qf
  std::vector<double> d_eta_z;    // dim * qf
};

// K-sample importance-weighted bound, averaged over n_mc replications.
BoundResult iwbo_estimate(const models::ClusteringModel& model,
                          std::span<const double> xs,
                          expfam::FamilyKind family,
                          std::span<const double> eta_s,
                          std::span<const double> eta_z, int k_samples,
                          int n_mc, Rng& rng);

// ELBO == importance-weighted bound at K = 1 (same draws, same arithmetic).
BoundResult elbo_estimate(const models::ClusteringModel& model,
                          std::span<const double> xs,
                          expfam::FamilyKind family,
                          std::span<const double> eta_s,
                          std::span<const double> eta_z, int n_mc, Rng& rng);

// ---------------------------------------------------------------------------
// Adam with the 1/(1 + i/I0) step-size schedule, I0 = total_steps / 10.
// ---------------------------------------------------------------------------

struct AdamConfig {
  double base_lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long total_steps = 0;  // for the schedule; 0 disables decay
};

struct AdamState {
  std::vector<double> m, v;
  long t = 0;  // completed steps (bias correction uses t+1)
  void init(size_t n) { m.assign(n, 0.0); v.assign(n, 0.0); t = 0; }
};

double lr_schedule(const AdamConfig& cfg, long step_index);

// One update in place; throws std::runtime_error on non-finite gradient.
void adam_step(AdamState& state, const AdamConfig& cfg,
               std::span<double> params, std::span<const double> grad,
               long step_index);

// Plain SGD step (constant learning rate), used where the update must be a
// faithful Euler discretization of gradient flow.
void sgd_step(std::span<double> params, std::span<const double> grad,
              double lr);

// ---------------------------------------------------------------------------
// Train loop with periodic recording and optional parameter snapshots.
// ---------------------------------------------------------------------------

enum class Optimizer { Adam, Sgd };

struct TraceRow {
  long step = 0;              // steps completed when recorded
  double objective = 0.0;     // estimate from the most recent step
  int snapshot = -1;          // index into TrainTrace::snapshots or -1
  std::vector<std::pair<std::string, double>> extra;
};

struct TrainTrace {
  std::vector<TraceRow> rows;
  std::vector<std::vector<double>> snapshots;  // flat params
  bool aborted = false;   // objective went non-finite; last rows are intact
  long abort_step = -1;
};

struct TrainProblem {
  std::vector<std::span<double>> param_blocks;
  // Computes the objective estimate and writes one gradient per block.
  std::function<double(Rng&, const std::vector<std::span<double>>& grads)>
      estimate;
};

// metric_hook (optional) may append extra columns to each recorded row.
TrainTrace train(TrainProblem& problem, const AdamConfig& cfg,
                 Optimizer optimizer, long steps, int record_every,
                 bool snapshot_on_record, Rng& rng,
                 const std::function<void(long, TraceRow&)>& metric_hook = {});

}  // namespace npeflow::objectives
