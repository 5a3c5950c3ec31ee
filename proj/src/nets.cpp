#include "npeflow/nets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "npeflow/simd.hpp"

namespace npeflow::nets {

using simd::Kernels;

// ---------------------------------------------------------------------------
// TwoLayerNet
// ---------------------------------------------------------------------------

TwoLayerNet two_layer_init(int p, int d, int q, Rng& rng) {
  if (p <= 0 || d <= 0 || q <= 0)
    throw std::invalid_argument("two_layer_init: dims must be positive");
  TwoLayerNet net;
  net.p = p;
  net.d = d;
  net.q = q;
  net.w.resize(static_cast<size_t>(p) * d);
  for (double& v : net.w) v = randn(rng);
  net.a.assign(static_cast<size_t>(q) * p, 0.0);  // f == 0 at init
  return net;
}

namespace {

void ensure_ws(const TwoLayerNet& net, NetWorkspace& ws) {
  if (static_cast<int>(ws.u.size()) < net.p) ws.u.resize(net.p);
  if (static_cast<int>(ws.s.size()) < net.p) ws.s.resize(net.p);
}

// u = W x (row-major W, arbitrary d; d == 2 uses the paired kernel).
void matvec(const Kernels& k, const double* w, const double* x, int p, int d,
            double* u) {
  if (d == 2) {
    k.pair_matvec2(w, x[0], x[1], u, static_cast<size_t>(p));
  } else {
    for (int j = 0; j < p; ++j)
      u[j] = k.dot(w + static_cast<size_t>(j) * d, x, static_cast<size_t>(d));
  }
}

}  // namespace

void forward(const TwoLayerNet& net, const double* x, double* out,
             NetWorkspace& ws) {
  ensure_ws(net, ws);
  const Kernels& k = simd::active();
  matvec(k, net.w.data(), x, net.p, net.d, ws.u.data());
  const double inv_sqrt_p = 1.0 / std::sqrt(static_cast<double>(net.p));
  // relu applied implicitly inside relu_dot against the A rows? A rows are
  // dense, so gate u explicitly once into ws.s and use plain dots.
  k.relu(ws.u.data(), ws.s.data(), static_cast<size_t>(net.p));
  for (int kk = 0; kk < net.q; ++kk)
    out[kk] = inv_sqrt_p * k.dot(net.a.data() + static_cast<size_t>(kk) * net.p,
                                 ws.s.data(), static_cast<size_t>(net.p));
}

std::vector<double> forward_copy(const TwoLayerNet& net,
                                 std::span<const double> x) {
  NetWorkspace ws;
  std::vector<double> out(net.q);
  forward(net, x.data(), out.data(), ws);
  return out;
}

void backprop(const TwoLayerNet& net, std::span<const double> xs,
              std::span<const double> gs, int batch, std::span<double> grad,
              NetWorkspace& ws) {
  if (static_cast<int>(grad.size()) != net.param_count())
    throw std::invalid_argument("backprop: grad has wrong length");
  ensure_ws(net, ws);
  std::fill(grad.begin(), grad.end(), 0.0);
  const Kernels& k = simd::active();
  const size_t p = static_cast<size_t>(net.p);
  const double scale = 1.0 / (std::sqrt(static_cast<double>(net.p)) * batch);
  double* grad_a = grad.data();                              // q x p
  double* grad_w = grad.data() + static_cast<size_t>(net.q) * p;  // p x d
  for (int b = 0; b < batch; ++b) {
    const double* x = xs.data() + static_cast<size_t>(b) * net.d;
    const double* g = gs.data() + static_cast<size_t>(b) * net.q;
    matvec(k, net.w.data(), x, net.p, net.d, ws.u.data());
    // dL/dA_kj = scale * g_k relu(u_j)
    k.relu(ws.u.data(), ws.s.data(), p);
    for (int kk = 0; kk < net.q; ++kk)
      k.axpy(scale * g[kk], ws.s.data(), grad_a + static_cast<size_t>(kk) * p, p);
    // s_j = [u_j > 0] sum_k A_kj g_k; dL/dW_j = scale * s_j x
    std::fill(ws.s.begin(), ws.s.begin() + net.p, 0.0);
    for (int kk = 0; kk < net.q; ++kk)
      k.axpy(g[kk], net.a.data() + static_cast<size_t>(kk) * p, ws.s.data(), p);
    for (int j = 0; j < net.p; ++j)
      if (!(ws.u[j] > 0.0)) ws.s[j] = 0.0;
    if (net.d == 2) {
      k.pair_outer_accum2(ws.s.data(), scale * x[0], scale * x[1], grad_w, p);
    } else {
      for (int j = 0; j < net.p; ++j)
        k.axpy(scale * ws.s[j], x, grad_w + static_cast<size_t>(j) * net.d,
               static_cast<size_t>(net.d));
    }
  }
}

std::vector<double> param_jacobian(const TwoLayerNet& net,
                                   std::span<const double> x) {
  const size_t pc = net.param_count();
  std::vector<double> jac(static_cast<size_t>(net.q) * pc, 0.0);
  NetWorkspace ws;
  ensure_ws(net, ws);
  matvec(simd::active(), net.w.data(), x.data(), net.p, net.d, ws.u.data());
  const double inv_sqrt_p = 1.0 / std::sqrt(static_cast<double>(net.p));
  for (int kk = 0; kk < net.q; ++kk) {
    double* row = jac.data() + static_cast<size_t>(kk) * pc;
    // A block: df_k/dA_lj = delta_{kl} relu(u_j)/sqrt(p)
    for (int j = 0; j < net.p; ++j)
      row[static_cast<size_t>(kk) * net.p + j] =
          inv_sqrt_p * std::max(ws.u[j], 0.0);
    // W block: df_k/dW_jm = A_kj [u_j > 0] x_m / sqrt(p)
    double* wrow = row + static_cast<size_t>(net.q) * net.p;
    for (int j = 0; j < net.p; ++j) {
      if (!(ws.u[j] > 0.0)) continue;
      const double c = inv_sqrt_p * net.a[static_cast<size_t>(kk) * net.p + j];
      for (int m = 0; m < net.d; ++m)
        wrow[static_cast<size_t>(j) * net.d + m] = c * x[m];
    }
  }
  return jac;
}

void flatten(const TwoLayerNet& net, std::span<double> out) {
  if (static_cast<int>(out.size()) != net.param_count())
    throw std::invalid_argument("flatten: wrong length");
  std::copy(net.a.begin(), net.a.end(), out.begin());
  std::copy(net.w.begin(), net.w.end(),
            out.begin() + static_cast<size_t>(net.q) * net.p);
}

void unflatten(TwoLayerNet& net, std::span<const double> params) {
  if (static_cast<int>(params.size()) != net.param_count())
    throw std::invalid_argument("unflatten: wrong length");
  std::copy(params.begin(), params.begin() + static_cast<size_t>(net.q) * net.p,
            net.a.begin());
  std::copy(params.begin() + static_cast<size_t>(net.q) * net.p, params.end(),
            net.w.begin());
}

// ---------------------------------------------------------------------------
// LinearizedNet
// ---------------------------------------------------------------------------

LinearizedNet linearize(const TwoLayerNet& net) {
  LinearizedNet lin;
  lin.base = net;
  lin.phi0.resize(net.param_count());
  flatten(net, lin.phi0);
  lin.phi = lin.phi0;
  return lin;
}

void lin_forward(const LinearizedNet& lin, const double* x, double* out,
                 NetWorkspace& ws) {
  const TwoLayerNet& net = lin.base;
  ensure_ws(net, ws);
  const size_t wsz = static_cast<size_t>(net.p) * net.d;
  if (ws.dw.size() < wsz) ws.dw.resize(wsz);
  if (static_cast<int>(ws.e.size()) < net.p) ws.e.resize(net.p);
  const Kernels& k = simd::active();
  const size_t p = static_cast<size_t>(net.p);
  const double inv_sqrt_p = 1.0 / std::sqrt(static_cast<double>(net.p));
  // Base activations at phi0.
  matvec(k, net.w.data(), x, net.p, net.d, ws.u.data());
  const size_t aoff = static_cast<size_t>(net.q) * p;
  // e_j = x . (w_j - w0_j), later gated by u0_j > 0.
  for (size_t i = 0; i < wsz; ++i)
    ws.dw[i] = lin.phi[aoff + i] - lin.phi0[aoff + i];
  matvec(k, ws.dw.data(), x, net.p, net.d, ws.e.data());
  k.relu(ws.u.data(), ws.s.data(), p);  // h0 = relu(u0)
  for (int kk = 0; kk < net.q; ++kk) {
    const double* a0 = net.a.data() + static_cast<size_t>(kk) * p;
    // f0_k + (1/sqrt p) [ (A_k - A0_k) . h0 + sum_j A0_kj [u0_j>0] e_j ]
    const double acc = k.dot(a0, ws.s.data(), p);  // f0 before scaling
    double d_a = 0.0;
    const double* arow = lin.phi.data() + static_cast<size_t>(kk) * p;
    const double* a0row = lin.phi0.data() + static_cast<size_t>(kk) * p;
    for (size_t j = 0; j < p; ++j) d_a += (arow[j] - a0row[j]) * ws.s[j];
    const double d_w =
        k.gated_dot(a0, ws.e.data(), ws.u.data(), ws.u.data(), p);
    out[kk] = inv_sqrt_p * (acc + d_a + d_w);
  }
}

void lin_backprop(const LinearizedNet& lin, std::span<const double> xs,
                  std::span<const double> gs, int batch, std::span<double> grad,
                  NetWorkspace& ws) {
  // The Jacobian is frozen at phi0, so this is exactly the base net's
  // backprop, independent of phi.
  backprop(lin.base, xs, gs, batch, grad, ws);
}

// ---------------------------------------------------------------------------
// Mlp / DeepSetEncoder
// ---------------------------------------------------------------------------

int Mlp::param_count() const {
  int n = 0;
  for (const auto& l : layers) n += l.out * l.in + l.out;
  return n;
}

Mlp mlp_init(std::span<const int> sizes, Rng& rng) {
  if (sizes.size() < 2) throw std::invalid_argument("mlp_init: need >= 2 sizes");
  Mlp mlp;
  for (size_t i = 0; i + 1 < sizes.size(); ++i) {
    DenseLayer l;
    l.in = sizes[i];
    l.out = sizes[i + 1];
    l.relu_after = (i + 2 < sizes.size());
    l.w.resize(static_cast<size_t>(l.out) * l.in);
    const double std = 1.0 / std::sqrt(static_cast<double>(l.in));
    for (double& v : l.w) v = std * randn(rng);
    l.b.assign(l.out, 0.0);
    mlp.layers.push_back(std::move(l));
  }
  return mlp;
}

namespace {

// Forward pass storing post-activation values per layer (index 0 = input).
void mlp_forward_cached(const Mlp& mlp, const double* x,
                        std::vector<std::vector<double>>& acts) {
  acts.resize(mlp.layers.size() + 1);
  acts[0].assign(x, x + mlp.in_dim());
  for (size_t li = 0; li < mlp.layers.size(); ++li) {
    const DenseLayer& l = mlp.layers[li];
    acts[li + 1].resize(l.out);
    for (int o = 0; o < l.out; ++o) {
      double acc = l.b[o];
      const double* wrow = l.w.data() + static_cast<size_t>(o) * l.in;
      for (int i = 0; i < l.in; ++i) acc += wrow[i] * acts[li][i];
      acts[li + 1][o] = l.relu_after ? std::max(acc, 0.0) : acc;
    }
  }
}

}  // namespace

void mlp_forward(const Mlp& mlp, const double* x, double* out) {
  std::vector<std::vector<double>> acts;
  mlp_forward_cached(mlp, x, acts);
  std::copy(acts.back().begin(), acts.back().end(), out);
}

DeepSetEncoder deepset_init(int hidden, int out_dim, double input_scale,
                            Rng& rng) {
  DeepSetEncoder enc;
  const int esz[3] = {1, hidden, hidden};
  enc.element = mlp_init(std::span<const int>(esz, 3), rng);
  // ReLU after the element net's last layer too (pooled features are
  // nonnegative); mlp_init leaves the final layer linear, so flip the flag.
  enc.element.layers.back().relu_after = true;
  const int hsz[3] = {hidden, hidden, out_dim};
  enc.head = mlp_init(std::span<const int>(hsz, 3), rng);
  enc.input_scale = input_scale;
  return enc;
}

namespace {

// The two element layers and the two head layers, unpacked. The structure is
// fixed by deepset_init; anything else routes through the generic Mlp path.
struct DeepSetView {
  const DenseLayer *e1, *e2, *h1, *h2;
  int hidden;
};

DeepSetView deepset_view(const DeepSetEncoder& enc) {
  if (enc.element.layers.size() != 2 || enc.head.layers.size() != 2 ||
      enc.element.in_dim() != 1)
    throw std::invalid_argument("deepset: unexpected layer structure");
  DeepSetView v;
  v.e1 = &enc.element.layers[0];
  v.e2 = &enc.element.layers[1];
  v.h1 = &enc.head.layers[0];
  v.h2 = &enc.head.layers[1];
  v.hidden = v.e1->out;
  return v;
}

// Batched element pass + pooled head pass; all activations stay in ws.
void deepset_forward_ws(const DeepSetEncoder& enc, std::span<const double> xs,
                        std::span<double> out, DeepSetWorkspace& ws) {
  if (xs.empty()) throw std::invalid_argument("deepset_forward: empty set");
  const DeepSetView v = deepset_view(enc);
  const simd::Kernels& k = simd::active();
  const size_t n = xs.size();
  const size_t h = static_cast<size_t>(v.hidden);
  // Canonical (sorted) order makes the pooled sum independent of input
  // permutation down to the last bit.
  ws.sx.assign(xs.begin(), xs.end());
  std::sort(ws.sx.begin(), ws.sx.end());
  for (double& s : ws.sx) s *= enc.input_scale;
  ws.h1.resize(n * h);
  ws.h2.resize(n * h);
  k.dense_fwd_relu(v.e1->w.data(), v.e1->b.data(), ws.sx.data(), ws.h1.data(),
                   h, 1, n);
  k.dense_fwd_relu(v.e2->w.data(), v.e2->b.data(), ws.h1.data(), ws.h2.data(),
                   h, h, n);
  ws.pool.assign(h, 0.0);
  for (size_t i = 0; i < n; ++i)
    k.axpy(1.0, ws.h2.data() + i * h, ws.pool.data(), h);
  const double inv_n = 1.0 / static_cast<double>(n);
  k.scale(inv_n, ws.pool.data(), h);
  ws.hh.resize(h);
  for (size_t o = 0; o < h; ++o)
    ws.hh[o] =
        std::max(k.dot(v.h1->w.data() + o * h, ws.pool.data(), h) + v.h1->b[o],
                 0.0);
  const size_t qo = static_cast<size_t>(v.h2->out);
  for (size_t o = 0; o < qo; ++o)
    out[o] = k.dot(v.h2->w.data() + o * h, ws.hh.data(), h) + v.h2->b[o];
}

}  // namespace

void deepset_forward(const DeepSetEncoder& enc, std::span<const double> xs,
                     std::span<double> out, DeepSetWorkspace& ws) {
  deepset_forward_ws(enc, xs, out, ws);
}

void deepset_forward(const DeepSetEncoder& enc, std::span<const double> xs,
                     std::span<double> out) {
  DeepSetWorkspace ws;
  deepset_forward_ws(enc, xs, out, ws);
}

void deepset_backprop(const DeepSetEncoder& enc, std::span<const double> xs,
                      std::span<const double> g, std::span<double> grad,
                      DeepSetWorkspace& ws) {
  if (static_cast<int>(grad.size()) != enc.param_count())
    throw std::invalid_argument("deepset_backprop: grad has wrong length");
  const DeepSetView v = deepset_view(enc);
  const simd::Kernels& k = simd::active();
  const size_t n = xs.size();
  const size_t h = static_cast<size_t>(v.hidden);
  const size_t qo = static_cast<size_t>(v.h2->out);
  if (ws.h1.size() != n * h || ws.hh.size() != h)
    throw std::logic_error("deepset_backprop: stale workspace (run forward first)");
  // Flat layout: e1.W e1.b e2.W e2.b | h1.W h1.b h2.W h2.b.
  double* ge1w = grad.data();
  double* ge1b = ge1w + h;  // e1.in == 1
  double* ge2w = ge1b + h;
  double* ge2b = ge2w + h * h;
  double* gh1w = ge2b + h;
  double* gh1b = gh1w + h * h;
  double* gh2w = gh1b + h;
  double* gh2b = gh2w + qo * h;
  // Head output layer.
  ws.ghh.assign(h, 0.0);
  for (size_t o = 0; o < qo; ++o) {
    const double go = g[o];
    gh2b[o] += go;
    k.axpy(go, ws.hh.data(), gh2w + o * h, h);
    k.axpy(go, v.h2->w.data() + o * h, ws.ghh.data(), h);
  }
  // Head hidden layer (ReLU gate from stored activation).
  ws.gpool.assign(h, 0.0);
  for (size_t o = 0; o < h; ++o) {
    if (!(ws.hh[o] > 0.0)) continue;
    const double go = ws.ghh[o];
    gh1b[o] += go;
    k.axpy(go, ws.pool.data(), gh1w + o * h, h);
    k.axpy(go, v.h1->w.data() + o * h, ws.gpool.data(), h);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  k.scale(inv_n, ws.gpool.data(), h);
  // Element layers, batched over the sorted elements: mask the pooled
  // gradient through each element's ReLU pattern, then let the batched
  // kernels do the heavy h*h work across the whole set at once.
  ws.g2.resize(n * h);
  for (size_t i = 0; i < n; ++i) {
    const double* r2 = ws.h2.data() + i * h;
    double* gc = ws.g2.data() + i * h;
    for (size_t o = 0; o < h; ++o)
      gc[o] = r2[o] > 0.0 ? ws.gpool[o] : 0.0;
  }
  k.accum_outer(ws.g2.data(), ws.h1.data(), ge2w, h, h, n);
  for (size_t i = 0; i < n; ++i)
    k.axpy(1.0, ws.g2.data() + i * h, ge2b, h);
  ws.g1.resize(n * h);
  k.matvec_t_batch(v.e2->w.data(), ws.g2.data(), ws.g1.data(), h, h, n);
  for (size_t i = 0; i < n; ++i) {
    const double* r1 = ws.h1.data() + i * h;
    const double* gc = ws.g1.data() + i * h;
    const double s = ws.sx[i];
    for (size_t j = 0; j < h; ++j) {
      if (!(r1[j] > 0.0)) continue;
      ge1w[j] += gc[j] * s;
      ge1b[j] += gc[j];
    }
  }
}

void deepset_backprop(const DeepSetEncoder& enc, std::span<const double> xs,
                      std::span<const double> g, std::span<double> grad) {
  DeepSetWorkspace ws;
  std::vector<double> out(enc.out_dim());
  deepset_forward_ws(enc, xs, out, ws);
  deepset_backprop(enc, xs, g, grad, ws);
}

namespace {

void mlp_flatten(const Mlp& mlp, double* out) {
  size_t off = 0;
  for (const auto& l : mlp.layers) {
    std::copy(l.w.begin(), l.w.end(), out + off);
    off += l.w.size();
    std::copy(l.b.begin(), l.b.end(), out + off);
    off += l.b.size();
  }
}

void mlp_unflatten(Mlp& mlp, const double* in) {
  size_t off = 0;
  for (auto& l : mlp.layers) {
    std::copy(in + off, in + off + l.w.size(), l.w.begin());
    off += l.w.size();
    std::copy(in + off, in + off + l.b.size(), l.b.begin());
    off += l.b.size();
  }
}

}  // namespace

void deepset_flatten(const DeepSetEncoder& enc, std::span<double> out) {
  if (static_cast<int>(out.size()) != enc.param_count())
    throw std::invalid_argument("deepset_flatten: wrong length");
  mlp_flatten(enc.element, out.data());
  mlp_flatten(enc.head, out.data() + enc.element.param_count());
}

void deepset_unflatten(DeepSetEncoder& enc, std::span<const double> params) {
  if (static_cast<int>(params.size()) != enc.param_count())
    throw std::invalid_argument("deepset_unflatten: wrong length");
  mlp_unflatten(enc.element, params.data());
  mlp_unflatten(enc.head, params.data() + enc.element.param_count());
}

// ---------------------------------------------------------------------------
// OutputMap
// ---------------------------------------------------------------------------

namespace {

// log(1 + e^t) without overflow.
double softplus(double t) {
  if (t > 36.0) return t;
  if (t < -36.0) return std::exp(t);
  return std::log1p(std::exp(t));
}

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

int map_out_dim(const OutputMap& map) { return expfam::param_dim(map.family); }

void apply_output_map(const OutputMap& map, std::span<const double> raw,
                      std::span<double> eta) {
  using expfam::FamilyKind;
  switch (map.family) {
    case FamilyKind::GaussianMeanOnly:
      eta[0] = raw[0];
      return;
    case FamilyKind::GaussianNatural:
      eta[0] = raw[0];
      eta[1] = -softplus(raw[1]) - map.offset;
      return;
    case FamilyKind::VonMisesNatural:
      // The additive offset keeps eta away from the excluded origin while
      // staying differentiable everywhere.
      eta[0] = raw[0] + map.offset;
      eta[1] = raw[1] + map.offset;
      return;
  }
}

void output_map_chain(const OutputMap& map, std::span<const double> raw,
                      std::span<const double> g_eta, std::span<double> g_raw) {
  using expfam::FamilyKind;
  switch (map.family) {
    case FamilyKind::GaussianMeanOnly:
      g_raw[0] = g_eta[0];
      return;
    case FamilyKind::GaussianNatural:
      g_raw[0] = g_eta[0];
      g_raw[1] = -logistic(raw[1]) * g_eta[1];
      return;
    case FamilyKind::VonMisesNatural:
      g_raw[0] = g_eta[0];
      g_raw[1] = g_eta[1];
      return;
  }
}

void output_map_inverse(const OutputMap& map, std::span<const double> eta,
                        std::span<double> raw) {
  using expfam::FamilyKind;
  expfam::require_valid(map.family, eta);
  switch (map.family) {
    case FamilyKind::GaussianMeanOnly:
      raw[0] = eta[0];
      return;
    case FamilyKind::GaussianNatural: {
      raw[0] = eta[0];
      const double t = -eta[1] - map.offset;  // softplus(raw1) = t
      if (!(t > 0.0))
        throw std::domain_error(
            "output_map_inverse: eta2 not reachable (needs eta2 < -offset)");
      // raw1 = log(e^t - 1), computed stably at both ends.
      raw[1] = t > 36.0 ? t : std::log(std::expm1(t));
      return;
    }
    case FamilyKind::VonMisesNatural:
      raw[0] = eta[0] - map.offset;
      raw[1] = eta[1] - map.offset;
      return;
  }
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void save_checkpoint(const std::string& path, const TwoLayerNet& net,
                     std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "npeflow-checkpoint v1\n";
  out << "layout a-rowmajor-then-w-rowmajor\n";
  out << "dims " << net.p << " " << net.d << " " << net.q << "\n";
  out << "seed " << seed << "\n";
  out << "params " << net.param_count() << "\n";
  std::vector<double> flat(net.param_count());
  flatten(net, flat);
  char buf[40];
  for (double v : flat) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

TwoLayerNet load_checkpoint(const std::string& path, std::uint64_t* seed_out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line, word;
  auto bad = [&](const std::string& why) {
    return std::runtime_error(path + ": malformed checkpoint (" + why + ")");
  };
  if (!std::getline(in, line) || line != "npeflow-checkpoint v1")
    throw bad("magic/version");
  if (!std::getline(in, line) || line != "layout a-rowmajor-then-w-rowmajor")
    throw bad("layout tag");
  int p = 0, d = 0, q = 0;
  std::uint64_t seed = 0;
  long long count = -1;
  if (!(in >> word >> p >> d >> q) || word != "dims") throw bad("dims");
  if (!(in >> word >> seed) || word != "seed") throw bad("seed");
  if (!(in >> word >> count) || word != "params") throw bad("params");
  TwoLayerNet net;
  net.p = p;
  net.d = d;
  net.q = q;
  if (count != static_cast<long long>(q) * p + static_cast<long long>(p) * d)
    throw bad("parameter count does not match dims");
  std::vector<double> flat(count);
  for (long long i = 0; i < count; ++i)
    if (!(in >> flat[i])) throw bad("truncated parameter list");
  net.a.resize(static_cast<size_t>(q) * p);
  net.w.resize(static_cast<size_t>(p) * d);
  unflatten(net, flat);
  if (seed_out) *seed_out = seed;
  return net;
}

}  // namespace npeflow::nets
