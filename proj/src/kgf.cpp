#include "npeflow/kgf.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "npeflow/bessel.hpp"

namespace npeflow::kgf {

using expfam::FamilyKind;

double pointwise_loss(const nets::OutputMap& map, std::span<const double> raw,
                      std::span<const double> m) {
  const int q = nets::map_out_dim(map);
  double eta[2];
  apply_output_map(map, raw, {eta, static_cast<size_t>(q)});
  double v = expfam::log_partition(map.family, {eta, static_cast<size_t>(q)});
  for (int k = 0; k < q; ++k) v -= eta[k] * m[k];
  return v;
}

void pointwise_loss_grad(const nets::OutputMap& map,
                         std::span<const double> raw,
                         std::span<const double> m, std::span<double> out) {
  const int q = nets::map_out_dim(map);
  double eta[2], g_eta[2];
  apply_output_map(map, raw, {eta, static_cast<size_t>(q)});
  expfam::grad_log_partition(map.family, {eta, static_cast<size_t>(q)},
                             {g_eta, static_cast<size_t>(q)});
  for (int k = 0; k < q; ++k) g_eta[k] -= m[k];
  output_map_chain(map, raw, {g_eta, static_cast<size_t>(q)}, out);
}

double grid_loss(const nets::OutputMap& map, const GridFunction& f,
                 const MomentTargets& targets) {
  const int n = f.grid.size();
  const int q = f.q;
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    acc += pointwise_loss(
        map,
        std::span<const double>(f.values.data() + static_cast<size_t>(i) * q,
                                static_cast<size_t>(q)),
        std::span<const double>(targets.m.data() + static_cast<size_t>(i) * q,
                                static_cast<size_t>(q)));
  return acc / n;
}

std::vector<double> moment_match_solve(FamilyKind family,
                                       std::span<const double> m, double tol) {
  const int q = expfam::param_dim(family);
  if (static_cast<int>(m.size()) != q)
    throw std::invalid_argument("moment_match_solve: m has wrong length");
  // Realizability: the moment map's range is open; reject anything outside.
  switch (family) {
    case FamilyKind::GaussianMeanOnly:
      return {m[0]};  // grad A = eta
    case FamilyKind::GaussianNatural: {
      const double var = m[1] - m[0] * m[0];
      if (!(var > 0.0)) {
        std::ostringstream msg;
        msg << "moment_match_solve: E[t^2] - E[t]^2 = " << var
            << " is not positive; no distribution in the family matches";
        throw std::domain_error(msg.str());
      }
      // Closed form: eta2 = -1/(2 var), eta1 = mean / var.
      return {m[0] / var, -0.5 / var};
    }
    case FamilyKind::VonMisesNatural: {
      const double rho = std::hypot(m[0], m[1]);
      if (!(rho > 0.0) || rho >= 1.0) {
        std::ostringstream msg;
        msg << "moment_match_solve: |m| = " << rho
            << " outside (0, 1); no von Mises matches";
        throw std::domain_error(msg.str());
      }
      // grad A(eta) = r(|eta|) eta/|eta|, so eta is parallel to m and we
      // solve the scalar equation r(kappa) = rho by damped Newton on
      // g(kappa) = r(kappa) - rho (r is strictly increasing, concave-ish).
      double kappa = rho * (2.0 - rho * rho) / (1.0 - rho * rho);  // classic start
      for (int it = 0; it < 200; ++it) {
        const double g = bessel::ratio_i1_i0(kappa) - rho;
        if (std::fabs(g) <= tol * 0.5) break;
        const double dg = bessel::ratio_i1_i0_prime(kappa);
        double step = -g / dg;
        // Damping: keep kappa positive and limit the step to stay in the
        // region where Newton converges.
        while (kappa + step <= 0.0) step *= 0.5;
        kappa += step;
      }
      std::vector<double> eta = {kappa * m[0] / rho, kappa * m[1] / rho};
      // Final residual check.
      double grad[2];
      expfam::grad_log_partition(family, eta, grad);
      const double res = std::hypot(grad[0] - m[0], grad[1] - m[1]);
      if (!(res <= tol))
        throw std::runtime_error("moment_match_solve: Newton did not reach tolerance");
      return eta;
    }
  }
  throw std::logic_error("moment_match_solve: unknown family");
}

GridFunction moment_matched_solution(const nets::OutputMap& map,
                                     const ntk::Grid& grid,
                                     const MomentTargets& targets) {
  const int q = nets::map_out_dim(map);
  GridFunction f;
  f.grid = grid;
  f.q = q;
  f.values.resize(static_cast<size_t>(grid.size()) * q);
  for (int n = 0; n < grid.size(); ++n) {
    const std::vector<double> eta = moment_match_solve(
        map.family,
        std::span<const double>(targets.m.data() + static_cast<size_t>(n) * q,
                                static_cast<size_t>(q)));
    output_map_inverse(map, eta,
                       std::span<double>(
                           f.values.data() + static_cast<size_t>(n) * q,
                           static_cast<size_t>(q)));
  }
  return f;
}

namespace {

long flow_steps(const FlowSpec& spec) {
  if (!(spec.step > 0.0) || !(spec.horizon > 0.0))
    throw std::invalid_argument("flow: step and horizon must be positive");
  const double raw = spec.horizon / spec.step;
  const long steps = std::lround(raw);
  if (std::fabs(raw - steps) > 1e-9 * std::max(1.0, raw))
    throw std::invalid_argument("flow: horizon must be an integer number of steps");
  return steps;
}

bool should_record(long step, long total, int stride) {
  return step % stride == 0 || step == total;
}

// Validates all mapped parameters; returns false if any grid point left the
// natural domain.
bool all_valid(const nets::OutputMap& map, const std::vector<double>& values,
               int n, int q) {
  double eta[2];
  for (int i = 0; i < n; ++i) {
    apply_output_map(map,
                     std::span<const double>(
                         values.data() + static_cast<size_t>(i) * q,
                         static_cast<size_t>(q)),
                     {eta, static_cast<size_t>(q)});
    if (!expfam::validate(map.family, {eta, static_cast<size_t>(q)}))
      return false;
  }
  return true;
}

}  // namespace

FlowTrajectory euler_flow(const GridFunction& f0, const MomentTargets& targets,
                          const ntk::KernelField& kernel,
                          const nets::OutputMap& map, const FlowSpec& spec) {
  const int n = f0.grid.size();
  const int q = f0.q;
  if (kernel.q != q) throw std::invalid_argument("euler_flow: kernel q mismatch");
  if (targets.q != q || static_cast<int>(targets.m.size()) != n * q)
    throw std::invalid_argument("euler_flow: targets shape mismatch");
  const long steps = flow_steps(spec);
  const int big = n * q;
  // Fixed kernel: precompute the Gram once; the step is a matvec.
  const std::vector<double> gram_v = ntk::grid_gram(kernel, f0.grid);
  Eigen::Map<const Eigen::MatrixXd> gram(gram_v.data(), big, big);
  std::vector<double> values = f0.values;
  Eigen::VectorXd lgrad(big);
  FlowTrajectory traj;
  traj.q = q;
  double prev_loss = grid_loss(map, {f0.grid, q, values}, targets);
  auto record = [&](long step) {
    traj.times.push_back(step * spec.step);
    traj.values.push_back(values);
    traj.loss.push_back(grid_loss(map, {f0.grid, q, values}, targets));
  };
  record(0);
  for (long s = 1; s <= steps; ++s) {
    for (int i = 0; i < n; ++i) {
      pointwise_loss_grad(
          map,
          std::span<const double>(values.data() + static_cast<size_t>(i) * q,
                                  static_cast<size_t>(q)),
          std::span<const double>(targets.m.data() + static_cast<size_t>(i) * q,
                                  static_cast<size_t>(q)),
          std::span<double>(lgrad.data() + static_cast<size_t>(i) * q,
                            static_cast<size_t>(q)));
      const double norm =
          lgrad.segment(static_cast<Eigen::Index>(i) * q, q).norm();
      traj.max_loss_grad_norm = std::max(traj.max_loss_grad_norm, norm);
    }
    Eigen::VectorXd delta = gram * lgrad * (spec.step / n);
    for (int i = 0; i < big; ++i) values[i] -= delta[i];
    if (!all_valid(map, values, n, q)) {
      std::ostringstream msg;
      msg << "euler_flow: mapped parameters left the natural domain at step "
          << s << " (t=" << s * spec.step
          << "); the step size " << spec.step << " is too large";
      throw std::runtime_error(msg.str());
    }
    const double cur_loss = grid_loss(map, {f0.grid, q, values}, targets);
    traj.max_step_increase =
        std::max(traj.max_step_increase, cur_loss - prev_loss);
    prev_loss = cur_loss;
    if (should_record(s, steps, spec.record_stride)) record(s);
  }
  return traj;
}

ParamFlowResult param_flow(const nets::TwoLayerNet& net0,
                           const MomentTargets& targets, const ntk::Grid& grid,
                           const nets::OutputMap& map, const FlowSpec& spec,
                           bool snapshot_nets) {
  const int n = grid.size();
  const int q = net0.q;
  if (targets.q != q || static_cast<int>(targets.m.size()) != n * q)
    throw std::invalid_argument("param_flow: targets shape mismatch");
  const long steps = flow_steps(spec);
  nets::TwoLayerNet net = net0;
  nets::NetWorkspace ws;
  std::vector<double> xs(grid.flat);  // batch = the whole grid
  std::vector<double> gs(static_cast<size_t>(n) * q);
  std::vector<double> raw(q);
  std::vector<double> grad(net.param_count());
  std::vector<double> values(static_cast<size_t>(n) * q);
  ParamFlowResult result;
  FlowTrajectory& traj = result.traj;
  traj.q = q;

  auto eval_grid = [&]() {
    for (int i = 0; i < n; ++i)
      forward(net, grid.point(i), values.data() + static_cast<size_t>(i) * q,
              ws);
  };
  auto record = [&](long step) {
    traj.times.push_back(step * spec.step);
    traj.values.push_back(values);
    traj.loss.push_back(grid_loss(map, {grid, q, values}, targets));
    if (snapshot_nets) result.net_snaps.push_back(net);
  };

  eval_grid();
  double prev_loss = grid_loss(map, {grid, q, values}, targets);
  record(0);
  for (long s = 1; s <= steps; ++s) {
    // gs_i = l'(f(x_i)); net backprop averages by 1/N, matching the
    // grid-averaged objective.
    for (int i = 0; i < n; ++i) {
      pointwise_loss_grad(
          map,
          std::span<const double>(values.data() + static_cast<size_t>(i) * q,
                                  static_cast<size_t>(q)),
          std::span<const double>(targets.m.data() + static_cast<size_t>(i) * q,
                                  static_cast<size_t>(q)),
          std::span<double>(gs.data() + static_cast<size_t>(i) * q,
                            static_cast<size_t>(q)));
    }
    backprop(net, xs, gs, n, grad, ws);
    for (int c = 0; c < net.q * net.p; ++c) net.a[c] -= spec.step * grad[c];
    const double* gw = grad.data() + static_cast<size_t>(net.q) * net.p;
    for (int c = 0; c < net.p * net.d; ++c) net.w[c] -= spec.step * gw[c];
    eval_grid();
    if (!all_valid(map, values, n, q)) {
      std::ostringstream msg;
      msg << "param_flow: mapped parameters left the natural domain at step "
          << s << "; the step size " << spec.step << " is too large";
      throw std::runtime_error(msg.str());
    }
    const double cur_loss = grid_loss(map, {grid, q, values}, targets);
    traj.max_step_increase =
        std::max(traj.max_step_increase, cur_loss - prev_loss);
    prev_loss = cur_loss;
    if (should_record(s, steps, spec.record_stride)) record(s);
  }
  return result;
}

LyapunovReport lyapunov_report(const FlowTrajectory& traj,
                               const GridFunction& f_star,
                               const ntk::KernelField& kernel,
                               const nets::OutputMap& map,
                               const MomentTargets& targets,
                               double envelope_tol, double t_min,
                               double step_slack) {
  const int n = f_star.grid.size();
  const int q = f_star.q;
  const int big = n * q;
  LyapunovReport rep;
  rep.jitter = 1e-10;
  // Delta0 = (1/2) v^T (G + jitter I)^{-1} v, v = f(0) - f* (raw space).
  const std::vector<double> gram_v = ntk::grid_gram(kernel, f_star.grid);
  Eigen::MatrixXd gram = Eigen::Map<const Eigen::MatrixXd>(gram_v.data(), big, big);
  gram.diagonal().array() += rep.jitter;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(
        "lyapunov_report: grid Gram is not positive definite after jitter");
  Eigen::VectorXd v(big);
  for (int i = 0; i < big; ++i) v[i] = traj.values.front()[i] - f_star.values[i];
  rep.delta0 = 0.5 * v.dot(llt.solve(v));

  const double loss_star = grid_loss(map, f_star, targets);
  rep.max_step_increase = traj.max_step_increase;
  rep.monotone = traj.max_step_increase <= step_slack;
  rep.envelope_ok = true;
  for (size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    if (t <= 0.0) continue;
    rep.times.push_back(t);
    rep.subopt.push_back(traj.loss[i] - loss_star);
    rep.envelope.push_back(rep.delta0 / t);
    if (t >= t_min &&
        rep.subopt.back() > rep.envelope.back() * (1.0 + envelope_tol))
      rep.envelope_ok = false;
  }
  return rep;
}

std::vector<double> trajectory_distance(const FlowTrajectory& a,
                                        const FlowTrajectory& b) {
  if (a.times.size() != b.times.size())
    throw std::invalid_argument("trajectory_distance: record counts differ");
  if (a.q != b.q || a.q <= 0)
    throw std::invalid_argument("trajectory_distance: output dims differ");
  std::vector<double> out(a.times.size());
  for (size_t i = 0; i < a.times.size(); ++i) {
    if (std::fabs(a.times[i] - b.times[i]) > 1e-12)
      throw std::invalid_argument("trajectory_distance: schedules differ");
    if (a.values[i].size() != b.values[i].size())
      throw std::invalid_argument("trajectory_distance: value shapes differ");
    const size_t vals = a.values[i].size();
    double s = 0.0;
    for (size_t j = 0; j < vals; ++j) {
      const double d = a.values[i][j] - b.values[i][j];
      s += d * d;
    }
    const double n_points = static_cast<double>(vals) / a.q;
    out[i] = std::sqrt(s / n_points);
  }
  return out;
}

}  // namespace npeflow::kgf
