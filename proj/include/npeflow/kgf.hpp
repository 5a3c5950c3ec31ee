#pragma once

#include <span>
#include <vector>

#include "npeflow/expfam.hpp"
#include "npeflow/nets.hpp"
#include "npeflow/ntk.hpp"

// Kernel gradient flow of the population objective restricted to a finite
// evaluation grid. The flow state lives in RAW output space (pre output
// map); the per-point loss is
//   l(g; m) = A(map(g)) - map(g) . m,
// whose unique stationary point matches the moment targets m = E[T].

namespace npeflow::kgf {

// Raw outputs on a grid: values is size() x q row-major.
struct GridFunction {
  ntk::Grid grid;
  int q = 0;
  std::vector<double> values;
};

// Per-point moment targets (posterior mean sufficient statistics).
struct MomentTargets {
  int q = 0;
  std::vector<double> m;  // N x q row-major
};

// l(raw; m) and its raw-space gradient J_map^T (grad A(eta) - m).
double pointwise_loss(const nets::OutputMap& map, std::span<const double> raw,
                      std::span<const double> m);
void pointwise_loss_grad(const nets::OutputMap& map,
                         std::span<const double> raw,
                         std::span<const double> m, std::span<double> out);

// Grid-averaged objective L(f) = (1/N) sum_n l(f(x_n); m_n).
double grid_loss(const nets::OutputMap& map, const GridFunction& f,
                 const MomentTargets& targets);

// Solves grad A(eta) = m by damped Newton to |grad A - m| <= tol.
// Throws std::domain_error when m is not a realizable moment vector.
std::vector<double> moment_match_solve(expfam::FamilyKind family,
                                       std::span<const double> m,
                                       double tol = 1e-10);

// Raw-space grid function whose mapped parameters moment-match the targets.
GridFunction moment_matched_solution(const nets::OutputMap& map,
                                     const ntk::Grid& grid,
                                     const MomentTargets& targets);

struct FlowSpec {
  double step = 0.01;       // Euler step h
  double horizon = 150.0;   // total time T (steps = round(T/h))
  int record_stride = 100;  // record every this many steps (plus t=0 and t=T)
};

struct FlowTrajectory {
  int q = 0;                                // outputs per grid point
  std::vector<double> times;                // recorded times
  std::vector<std::vector<double>> values;  // raw grid values per record
  std::vector<double> loss;                 // grid loss per record
  double max_step_increase = 0.0;  // max per-step loss increase seen (any step)
  double max_loss_grad_norm = 0.0; // max over steps of max_n |l'_n|
};

// Euler integration of f_dot(x_n) = -(1/N) sum_m K(x_n, x_m) l'_m under a
// FIXED kernel. Throws std::runtime_error (step size too large) if a step
// leaves the natural domain.
FlowTrajectory euler_flow(const GridFunction& f0, const MomentTargets& targets,
                          const ntk::KernelField& kernel,
                          const nets::OutputMap& map, const FlowSpec& spec);

// Full-batch Euler steps on the finite net's parameters for the same grid
// objective; records the net's grid values on the same schedule. Snapshots of
// the net itself are kept when snapshot_nets is true.
struct ParamFlowResult {
  FlowTrajectory traj;
  std::vector<nets::TwoLayerNet> net_snaps;
};
ParamFlowResult param_flow(const nets::TwoLayerNet& net0,
                           const MomentTargets& targets, const ntk::Grid& grid,
                           const nets::OutputMap& map, const FlowSpec& spec,
                           bool snapshot_nets = false);

// Certificate for the limiting flow: suboptimality against the envelope
// Delta0 / t, Delta0 = (1/2) v^T G^{-1} v with v = f0 - f* in raw space and
// G the (jittered) grid Gram of the kernel.
struct LyapunovReport {
  double delta0 = 0.0;
  double jitter = 0.0;
  std::vector<double> times;     // recorded times with t > 0
  std::vector<double> subopt;    // L(f_t) - L(f*)
  std::vector<double> envelope;  // Delta0 / t
  double max_step_increase = 0.0;
  bool monotone = false;      // descent up to per-step slack
  bool envelope_ok = false;   // subopt <= envelope * (1 + tol) for t >= t_min
};

LyapunovReport lyapunov_report(const FlowTrajectory& traj,
                               const GridFunction& f_star,
                               const ntk::KernelField& kernel,
                               const nets::OutputMap& map,
                               const MomentTargets& targets,
                               double envelope_tol = 0.1, double t_min = 1.0,
                               double step_slack = 1e-8);

// Per-record root-mean-square distance between two trajectories on the same
// grid/schedule: sqrt((1/N) sum_n |fA(x_n) - fB(x_n)|^2).
std::vector<double> trajectory_distance(const FlowTrajectory& a,
                                        const FlowTrajectory& b);

}  // namespace npeflow::kgf
