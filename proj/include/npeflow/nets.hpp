#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "npeflow/expfam.hpp"
#include "npeflow/rng.hpp"

// Encoder networks and the output map that turns raw network outputs into
// valid natural parameters. Flat parameter layout is part of each network's
// contract (checkpoints carry a layout version tag).

namespace npeflow::nets {

// ---------------------------------------------------------------------------
// Width-p two-layer ReLU net f(x) = (1/sqrt(p)) A relu(W x).
// Init: W_ij ~ N(0,1), A = 0 (so f == 0 at init and the backward ReLU gate
// relu'(0) = 0 is never load-bearing). Flat order: A row-major, then W
// row-major.
// ---------------------------------------------------------------------------

struct TwoLayerNet {
  int p = 0, d = 0, q = 0;
  std::vector<double> w;  // p x d row-major
  std::vector<double> a;  // q x p row-major

  int param_count() const { return q * p + p * d; }
};

TwoLayerNet two_layer_init(int p, int d, int q, Rng& rng);

// Scratch buffers reused across forward/backprop calls (no per-call allocs).
struct NetWorkspace {
  std::vector<double> u;   // pre-activations, length p
  std::vector<double> s;   // backward gate buffer, length p
  std::vector<double> dw;  // linearized-path delta weights, length p*d
  std::vector<double> e;   // linearized-path inner products, length p
};

// out has length q. Keeps relu(u) implicitly (u stored in ws).
void forward(const TwoLayerNet& net, const double* x, double* out,
             NetWorkspace& ws);
std::vector<double> forward_copy(const TwoLayerNet& net,
                                 std::span<const double> x);

// Batch-averaged parameter gradient of sum_k g_k f_k: xs is batch*d,
// gs is batch*q, grad (length param_count, flat order) is overwritten.
void backprop(const TwoLayerNet& net, std::span<const double> xs,
              std::span<const double> gs, int batch, std::span<double> grad,
              NetWorkspace& ws);

// Dense q x param_count row-major Jacobian d f / d params at x. For tests
// and small widths only.
std::vector<double> param_jacobian(const TwoLayerNet& net,
                                   std::span<const double> x);

void flatten(const TwoLayerNet& net, std::span<double> out);
void unflatten(TwoLayerNet& net, std::span<const double> params);

// ---------------------------------------------------------------------------
// First-order expansion of a TwoLayerNet frozen at its creation point:
// f_lin(x; phi) = f(x; phi0) + J(x; phi0) (phi - phi0).
// Training moves `phi` only; `base` stays fixed.
// ---------------------------------------------------------------------------

struct LinearizedNet {
  TwoLayerNet base;          // snapshot at phi0
  std::vector<double> phi;   // current flat parameters
  std::vector<double> phi0;  // flat snapshot
};

LinearizedNet linearize(const TwoLayerNet& net);
void lin_forward(const LinearizedNet& lin, const double* x, double* out,
                 NetWorkspace& ws);
// The Jacobian is frozen, so the parameter gradient equals the base net's
// backprop at phi0.
void lin_backprop(const LinearizedNet& lin, std::span<const double> xs,
                  std::span<const double> gs, int batch, std::span<double> grad,
                  NetWorkspace& ws);

// ---------------------------------------------------------------------------
// Plain MLP and a mean-pooled set encoder for exchangeable scalar sets.
// ---------------------------------------------------------------------------

struct DenseLayer {
  int in = 0, out = 0;
  std::vector<double> w;  // out x in row-major
  std::vector<double> b;  // out
  bool relu_after = false;
};

struct Mlp {
  std::vector<DenseLayer> layers;
  int in_dim() const { return layers.front().in; }
  int out_dim() const { return layers.back().out; }
  int param_count() const;
};

// Layer sizes including input/output; ReLU after every layer except the last.
// W ~ N(0, 1/fan_in), b = 0.
Mlp mlp_init(std::span<const int> sizes, Rng& rng);
void mlp_forward(const Mlp& mlp, const double* x, double* out);

struct DeepSetEncoder {
  Mlp element;  // 1 -> hidden -> hidden (ReLU after each)
  Mlp head;     // hidden -> hidden -> out_dim (ReLU after first)
  double input_scale = 1.0;  // fixed input normalization, not trained
  int out_dim() const { return head.out_dim(); }
  int param_count() const { return element.param_count() + head.param_count(); }
};

DeepSetEncoder deepset_init(int hidden, int out_dim, double input_scale,
                            Rng& rng);

// Reusable buffers for the batched element pass (sized on first use).
struct DeepSetWorkspace {
  std::vector<double> sx;           // sorted, scaled inputs
  std::vector<double> h1, h2;       // n x hidden element activations
  std::vector<double> pool, hh;     // pooled features, head hidden layer
  std::vector<double> g1, g2, gpool, ghh;
};

// Elements are processed in canonically sorted order so the pooled mean is
// bit-exact under any permutation of xs.
void deepset_forward(const DeepSetEncoder& enc, std::span<const double> xs,
                     std::span<double> out, DeepSetWorkspace& ws);
void deepset_forward(const DeepSetEncoder& enc, std::span<const double> xs,
                     std::span<double> out);

// Parameter gradient of g . enc(xs); grad is ACCUMULATED (callers zero it),
// flat order: element-net layers then head layers, each layer W then b.
// Requires a forward pass in the same workspace for the same xs.
void deepset_backprop(const DeepSetEncoder& enc, std::span<const double> xs,
                      std::span<const double> g, std::span<double> grad,
                      DeepSetWorkspace& ws);
void deepset_backprop(const DeepSetEncoder& enc, std::span<const double> xs,
                      std::span<const double> g, std::span<double> grad);

void deepset_flatten(const DeepSetEncoder& enc, std::span<double> out);
void deepset_unflatten(DeepSetEncoder& enc, std::span<const double> params);

// ---------------------------------------------------------------------------
// Output map: raw network outputs -> valid natural parameters, smooth, with
// full range over the natural domain.
// ---------------------------------------------------------------------------

struct OutputMap {
  expfam::FamilyKind family = expfam::FamilyKind::VonMisesNatural;
  double offset = 1e-4;  // margin keeping eta strictly inside the domain
};

int map_out_dim(const OutputMap& map);  // == family param_dim

void apply_output_map(const OutputMap& map, std::span<const double> raw,
                      std::span<double> eta);

// g_raw = J_map(raw)^T g_eta (chain rule through the map).
void output_map_chain(const OutputMap& map, std::span<const double> raw,
                      std::span<const double> g_eta, std::span<double> g_raw);

// Inverse of the map; throws std::domain_error if eta is not reachable.
void output_map_inverse(const OutputMap& map, std::span<const double> eta,
                        std::span<double> raw);

// ---------------------------------------------------------------------------
// Checkpoints: self-describing text records (dims, seed, layout tag, %.17g
// parameters) that round-trip bit-exactly.
// ---------------------------------------------------------------------------

void save_checkpoint(const std::string& path, const TwoLayerNet& net,
                     std::uint64_t seed);
TwoLayerNet load_checkpoint(const std::string& path,
                            std::uint64_t* seed_out = nullptr);

}  // namespace npeflow::nets
