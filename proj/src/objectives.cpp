#include "npeflow/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "npeflow/simd.hpp"

namespace npeflow::objectives {

using expfam::FamilyKind;

// ---------------------------------------------------------------------------
// Forward-KL estimator
// ---------------------------------------------------------------------------

double fkl_gradient_estimate(const JointSampler& sampler, const EncoderRef& enc,
                             const nets::OutputMap& map, int batch, Rng& rng,
                             std::span<double> grad) {
  if (batch <= 0) throw std::invalid_argument("fkl: batch must be positive");
  const int qf = nets::map_out_dim(map);
  if (enc.raw_dim != qf)
    throw std::invalid_argument("fkl: encoder raw dim does not match family");
  std::vector<JointSample> samples;
  samples.reserve(batch);
  std::vector<double> gs(static_cast<size_t>(batch) * qf);
  std::vector<double> raw(qf), eta(qf), g_eta(qf);
  double loss = 0.0;
  for (int b = 0; b < batch; ++b) {
    samples.push_back(sampler(rng));
    const JointSample& s = samples.back();
    if (s.latent.size() != 1)
      throw std::invalid_argument("fkl: expected scalar latent");
    enc.forward(s.obs.data(), s.obs.size(), raw.data());
    apply_output_map(map, raw, eta);
    loss -= expfam::log_density(map.family, eta, s.latent[0]);
    // d(-log q)/d eta = grad A(eta) - T(theta)
    expfam::grad_log_density_eta(map.family, eta, s.latent[0], g_eta);
    for (int k = 0; k < qf; ++k) g_eta[k] = -g_eta[k];
    output_map_chain(map, raw, g_eta,
                     std::span<double>(gs.data() + static_cast<size_t>(b) * qf,
                                       static_cast<size_t>(qf)));
  }
  enc.backprop(samples, gs, grad);
  return loss / batch;
}

EncoderRef encoder_ref(nets::TwoLayerNet& net) {
  auto ws = std::make_shared<nets::NetWorkspace>();
  EncoderRef ref;
  ref.raw_dim = net.q;
  ref.param_count = static_cast<size_t>(net.param_count());
  ref.forward = [&net, ws](const double* obs, size_t obs_len, double* raw) {
    if (static_cast<int>(obs_len) != net.d)
      throw std::invalid_argument("encoder: obs length != net input dim");
    forward(net, obs, raw, *ws);
  };
  ref.backprop = [&net, ws](const std::vector<JointSample>& batch,
                            const std::vector<double>& gs,
                            std::span<double> grad) {
    const int B = static_cast<int>(batch.size());
    std::vector<double> xs(static_cast<size_t>(B) * net.d);
    for (int b = 0; b < B; ++b)
      std::copy(batch[b].obs.begin(), batch[b].obs.end(),
                xs.begin() + static_cast<size_t>(b) * net.d);
    backprop(net, xs, gs, B, grad, *ws);
  };
  return ref;
}

EncoderRef encoder_ref(nets::LinearizedNet& lin) {
  auto ws = std::make_shared<nets::NetWorkspace>();
  EncoderRef ref;
  ref.raw_dim = lin.base.q;
  ref.param_count = lin.phi.size();
  ref.forward = [&lin, ws](const double* obs, size_t obs_len, double* raw) {
    if (static_cast<int>(obs_len) != lin.base.d)
      throw std::invalid_argument("encoder: obs length != net input dim");
    lin_forward(lin, obs, raw, *ws);
  };
  ref.backprop = [&lin, ws](const std::vector<JointSample>& batch,
                            const std::vector<double>& gs,
                            std::span<double> grad) {
    const int B = static_cast<int>(batch.size());
    std::vector<double> xs(static_cast<size_t>(B) * lin.base.d);
    for (int b = 0; b < B; ++b)
      std::copy(batch[b].obs.begin(), batch[b].obs.end(),
                xs.begin() + static_cast<size_t>(b) * lin.base.d);
    lin_backprop(lin, xs, gs, B, grad, *ws);
  };
  return ref;
}

// ---------------------------------------------------------------------------
// Clustering FKL
// ---------------------------------------------------------------------------

double clustering_fkl_gradient(const models::ClusteringModel& model,
                               ClusteringEncoders& encs, int batch, Rng& rng,
                               std::span<double> grad_s,
                               std::span<double> grad_z) {
  if (batch <= 0) throw std::invalid_argument("fkl: batch must be positive");
  const int qf = nets::map_out_dim(encs.map);
  const int d = model.dim();
  if (encs.enc_s.out_dim() != qf || encs.enc_z.out_dim() != d * qf)
    throw std::invalid_argument("fkl: encoder output dims do not match model");
  if (static_cast<int>(grad_s.size()) != encs.enc_s.param_count() ||
      static_cast<int>(grad_z.size()) != encs.enc_z.param_count())
    throw std::invalid_argument("fkl: gradient buffers have wrong length");
  std::fill(grad_s.begin(), grad_s.end(), 0.0);
  std::fill(grad_z.begin(), grad_z.end(), 0.0);
  std::vector<double> raw_s(qf), raw_z(static_cast<size_t>(d) * qf);
  std::vector<double> eta(qf), g_eta(qf);
  std::vector<double> g_raw_s(qf), g_raw_z(static_cast<size_t>(d) * qf);
  double loss = 0.0;
  const double inv_b = 1.0 / batch;
  for (int b = 0; b < batch; ++b) {
    const models::ClusteringDraw draw = clustering_sample_joint(model, rng);
    deepset_forward(encs.enc_s, draw.xs, raw_s, encs.ws_s);
    deepset_forward(encs.enc_z, draw.xs, raw_z, encs.ws_z);
    // S factor.
    apply_output_map(encs.map, raw_s, eta);
    loss -= expfam::log_density(encs.map.family, eta, draw.s);
    expfam::grad_log_density_eta(encs.map.family, eta, draw.s, g_eta);
    for (int k = 0; k < qf; ++k) g_eta[k] = -g_eta[k] * inv_b;
    output_map_chain(encs.map, raw_s, g_eta, g_raw_s);
    deepset_backprop(encs.enc_s, draw.xs, g_raw_s, grad_s, encs.ws_s);
    // Z factors (mean-field, one block of qf raw outputs per coordinate).
    for (int j = 0; j < d; ++j) {
      std::span<const double> rawj(raw_z.data() + static_cast<size_t>(j) * qf,
                                   static_cast<size_t>(qf));
      apply_output_map(encs.map, rawj, eta);
      loss -= expfam::log_density(encs.map.family, eta, draw.z[j]);
      expfam::grad_log_density_eta(encs.map.family, eta, draw.z[j], g_eta);
      for (int k = 0; k < qf; ++k) g_eta[k] = -g_eta[k] * inv_b;
      output_map_chain(encs.map, rawj, g_eta,
                       std::span<double>(
                           g_raw_z.data() + static_cast<size_t>(j) * qf,
                           static_cast<size_t>(qf)));
    }
    deepset_backprop(encs.enc_z, draw.xs, g_raw_z, grad_z, encs.ws_z);
  }
  return loss * inv_b;
}

double clustering_iwbo_gradient(const models::ClusteringModel& model,
                                ClusteringEncoders& encs, int k_samples,
                                Rng& rng, std::span<double> grad_s,
                                std::span<double> grad_z) {
  if (k_samples <= 0)
    throw std::invalid_argument("iwbo: k_samples must be positive");
  const int qf = nets::map_out_dim(encs.map);
  const int d = model.dim();
  if (encs.enc_s.out_dim() != qf || encs.enc_z.out_dim() != d * qf)
    throw std::invalid_argument("iwbo: encoder output dims do not match model");
  if (static_cast<int>(grad_s.size()) != encs.enc_s.param_count() ||
      static_cast<int>(grad_z.size()) != encs.enc_z.param_count())
    throw std::invalid_argument("iwbo: gradient buffers have wrong length");
  std::fill(grad_s.begin(), grad_s.end(), 0.0);
  std::fill(grad_z.begin(), grad_z.end(), 0.0);
  const models::ClusteringDraw draw = clustering_sample_joint(model, rng);
  std::vector<double> raw_s(qf), raw_z(static_cast<size_t>(d) * qf);
  deepset_forward(encs.enc_s, draw.xs, raw_s, encs.ws_s);
  deepset_forward(encs.enc_z, draw.xs, raw_z, encs.ws_z);
  std::vector<double> eta_s(qf), eta_z(static_cast<size_t>(d) * qf);
  apply_output_map(encs.map, raw_s, eta_s);
  for (int j = 0; j < d; ++j)
    apply_output_map(
        encs.map,
        std::span<const double>(raw_z.data() + static_cast<size_t>(j) * qf,
                                static_cast<size_t>(qf)),
        std::span<double>(eta_z.data() + static_cast<size_t>(j) * qf,
                          static_cast<size_t>(qf)));
  const BoundResult res = iwbo_estimate(model, draw.xs, encs.map.family, eta_s,
                                        eta_z, k_samples, 1, rng);
  std::vector<double> g_eta(qf), g_raw_s(qf);
  std::vector<double> g_raw_z(static_cast<size_t>(d) * qf);
  for (int k = 0; k < qf; ++k) g_eta[k] = -res.d_eta_s[k];
  output_map_chain(encs.map, raw_s, g_eta, g_raw_s);
  deepset_backprop(encs.enc_s, draw.xs, g_raw_s, grad_s, encs.ws_s);
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < qf; ++k)
      g_eta[k] = -res.d_eta_z[static_cast<size_t>(j) * qf + k];
    output_map_chain(encs.map,
                     std::span<const double>(
                         raw_z.data() + static_cast<size_t>(j) * qf,
                         static_cast<size_t>(qf)),
                     g_eta,
                     std::span<double>(
                         g_raw_z.data() + static_cast<size_t>(j) * qf,
                         static_cast<size_t>(qf)));
  }
  deepset_backprop(encs.enc_z, draw.xs, g_raw_z, grad_z, encs.ws_z);
  return -res.value;
}

// ---------------------------------------------------------------------------
// Likelihood-based bounds
// ---------------------------------------------------------------------------

namespace {

// Reparameterized scalar draw from q(.; eta) with everything the pathwise +
// score gradient needs.
struct ReparamDraw {
  double value = 0.0;
  double log_q = 0.0;
  double dlogq_dvalue = 0.0;
  double ds_deta[2] = {0.0, 0.0};   // d value / d eta
  double score[2] = {0.0, 0.0};     // T(value) - grad A(eta)
};

ReparamDraw reparam_draw(FamilyKind family, std::span<const double> eta,
                         Rng& rng) {
  ReparamDraw r;
  const double eps = randn(rng);
  switch (family) {
    case FamilyKind::GaussianMeanOnly: {
      r.value = eta[0] + eps;
      r.ds_deta[0] = 1.0;
      r.dlogq_dvalue = eta[0] - r.value;
      r.score[0] = r.value - eta[0];
      break;
    }
    case FamilyKind::GaussianNatural: {
      expfam::require_valid(family, eta);
      const double var = -0.5 / eta[1];
      const double mu = eta[0] * var;
      const double sd = std::sqrt(var);
      r.value = mu + sd * eps;
      r.ds_deta[0] = var;                          // d mu / d eta1
      r.ds_deta[1] = 2.0 * mu * var + eps * sd * var;  // d mu/d eta2 + eps d sd/d eta2
      r.dlogq_dvalue = eta[0] + 2.0 * eta[1] * r.value;
      r.score[0] = r.value - mu;
      r.score[1] = r.value * r.value - (mu * mu + var);
      break;
    }
    default:
      throw std::invalid_argument(
          "reparameterized sampling supports Gaussian families only");
  }
  r.log_q = expfam::log_density(family, eta, r.value);
  return r;
}

}  // namespace

BoundResult iwbo_estimate(const models::ClusteringModel& model,
                          std::span<const double> xs, FamilyKind family,
                          std::span<const double> eta_s,
                          std::span<const double> eta_z, int k_samples,
                          int n_mc, Rng& rng) {
  if (k_samples <= 0 || n_mc <= 0)
    throw std::invalid_argument("iwbo: k_samples and n_mc must be positive");
  const int qf = expfam::param_dim(family);
  const int d = model.dim();
  if (static_cast<int>(eta_s.size()) != qf ||
      static_cast<int>(eta_z.size()) != static_cast<size_t>(d) * qf)
    throw std::invalid_argument("iwbo: eta blocks have wrong length");
  BoundResult out;
  out.d_eta_s.assign(qf, 0.0);
  out.d_eta_z.assign(static_cast<size_t>(d) * qf, 0.0);
  std::vector<ReparamDraw> ds(k_samples);
  std::vector<std::vector<ReparamDraw>> dz(
      k_samples, std::vector<ReparamDraw>(d));
  std::vector<double> logw(k_samples);
  std::vector<double> zbuf(d), dlp_dz(d);
  const double inv_mc = 1.0 / n_mc;
  for (int rep = 0; rep < n_mc; ++rep) {
    for (int k = 0; k < k_samples; ++k) {
      ds[k] = reparam_draw(family, eta_s, rng);
      double lq = ds[k].log_q;
      for (int j = 0; j < d; ++j) {
        dz[k][j] = reparam_draw(
            family,
            eta_z.subspan(static_cast<size_t>(j) * qf, static_cast<size_t>(qf)),
            rng);
        lq += dz[k][j].log_q;
        zbuf[j] = dz[k][j].value;
      }
      logw[k] =
          models::clustering_log_joint(model, ds[k].value, zbuf, xs) - lq;
    }
    double mx = *std::max_element(logw.begin(), logw.end());
    double sum = 0.0;
    for (int k = 0; k < k_samples; ++k) sum += std::exp(logw[k] - mx);
    out.value += inv_mc * (mx + std::log(sum) - std::log(double(k_samples)));
    // d bound / d eta = sum_k wbar_k d log w_k / d eta, with
    // d log w_k / d eta = (dlogp/dv - dlogq/dv) dv/deta - score(v).
    for (int k = 0; k < k_samples; ++k) {
      const double wbar = std::exp(logw[k] - mx) / sum;
      if (wbar == 0.0) continue;
      for (int j = 0; j < d; ++j) zbuf[j] = dz[k][j].value;
      double dlp_ds = 0.0;
      models::clustering_log_joint_grad(model, ds[k].value, zbuf, xs, dlp_ds,
                                        dlp_dz);
      const double path_s = dlp_ds - ds[k].dlogq_dvalue;
      for (int c = 0; c < qf; ++c)
        out.d_eta_s[c] +=
            inv_mc * wbar * (path_s * ds[k].ds_deta[c] - ds[k].score[c]);
      for (int j = 0; j < d; ++j) {
        const double path_z = dlp_dz[j] - dz[k][j].dlogq_dvalue;
        for (int c = 0; c < qf; ++c)
          out.d_eta_z[static_cast<size_t>(j) * qf + c] +=
              inv_mc * wbar *
              (path_z * dz[k][j].ds_deta[c] - dz[k][j].score[c]);
      }
    }
  }
  return out;
}

BoundResult elbo_estimate(const models::ClusteringModel& model,
                          std::span<const double> xs, FamilyKind family,
                          std::span<const double> eta_s,
                          std::span<const double> eta_z, int n_mc, Rng& rng) {
  return iwbo_estimate(model, xs, family, eta_s, eta_z, 1, n_mc, rng);
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

double lr_schedule(const AdamConfig& cfg, long step_index) {
  if (cfg.total_steps <= 0) return cfg.base_lr;
  const double i0 = cfg.total_steps / 10.0;
  return cfg.base_lr / (1.0 + step_index / i0);
}

void adam_step(AdamState& state, const AdamConfig& cfg,
               std::span<double> params, std::span<const double> grad,
               long step_index) {
  if (params.size() != grad.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: size mismatch");
  for (double g : grad)
    if (!std::isfinite(g))
      throw std::runtime_error("adam_step: non-finite gradient");
  const long t = state.t + 1;
  const double c1 = 1.0 / (1.0 - std::pow(cfg.beta1, double(t)));
  const double c2 = 1.0 / (1.0 - std::pow(cfg.beta2, double(t)));
  simd::active().adam_update(params.data(), grad.data(), state.m.data(),
                             state.v.data(), params.size(), cfg.beta1,
                             cfg.beta2, cfg.eps, lr_schedule(cfg, step_index),
                             c1, c2);
  state.t = t;
}

void sgd_step(std::span<double> params, std::span<const double> grad,
              double lr) {
  if (params.size() != grad.size())
    throw std::invalid_argument("sgd_step: size mismatch");
  for (double g : grad)
    if (!std::isfinite(g)) throw std::runtime_error("sgd_step: non-finite gradient");
  simd::active().axpy(-lr, grad.data(), params.data(), params.size());
}

// ---------------------------------------------------------------------------
// Train loop
// ---------------------------------------------------------------------------

TrainTrace train(TrainProblem& problem, const AdamConfig& cfg,
                 Optimizer optimizer, long steps, int record_every,
                 bool snapshot_on_record, Rng& rng,
                 const std::function<void(long, TraceRow&)>& metric_hook) {
  if (record_every <= 0)
    throw std::invalid_argument("train: record_every must be positive");
  TrainTrace trace;
  const size_t nblocks = problem.param_blocks.size();
  std::vector<std::vector<double>> grads(nblocks);
  std::vector<std::span<double>> grad_spans;
  for (size_t i = 0; i < nblocks; ++i) {
    grads[i].resize(problem.param_blocks[i].size());
    grad_spans.emplace_back(grads[i]);
  }
  std::vector<AdamState> states(nblocks);
  for (size_t i = 0; i < nblocks; ++i)
    states[i].init(problem.param_blocks[i].size());

  auto snapshot_params = [&]() {
    std::vector<double> flat;
    for (const auto& blk : problem.param_blocks)
      flat.insert(flat.end(), blk.begin(), blk.end());
    return flat;
  };
  auto record = [&](long step, double objective) {
    TraceRow row;
    row.step = step;
    row.objective = objective;
    if (snapshot_on_record) {
      row.snapshot = static_cast<int>(trace.snapshots.size());
      trace.snapshots.push_back(snapshot_params());
    }
    if (metric_hook) metric_hook(step, row);
    trace.rows.push_back(std::move(row));
  };

  for (long i = 0; i < steps; ++i) {
    const double obj = problem.estimate(rng, grad_spans);
    if (!std::isfinite(obj)) {
      // Abort before applying the update so recorded snapshots and the
      // current parameters are the last good state.
      record(i, obj);
      trace.aborted = true;
      trace.abort_step = i;
      return trace;
    }
    if (i % record_every == 0) record(i, obj);
    for (size_t b = 0; b < nblocks; ++b) {
      if (optimizer == Optimizer::Adam)
        adam_step(states[b], cfg, problem.param_blocks[b], grads[b], i);
      else
        sgd_step(problem.param_blocks[b], grads[b], cfg.base_lr);
    }
  }
  // Objective at the final parameters (one extra estimate).
  const double final_obj = problem.estimate(rng, grad_spans);
  record(steps, final_obj);
  return trace;
}

}  // namespace npeflow::objectives
