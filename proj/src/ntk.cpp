#include "npeflow/ntk.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include <Eigen/Dense>

#include "npeflow/simd.hpp"

namespace npeflow::ntk {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 6.283185307179586476925286766559;
}  // namespace

Grid unit_circle_grid(int n) {
  if (n <= 0) throw std::invalid_argument("unit_circle_grid: n must be positive");
  Grid g;
  g.dim = 2;
  g.flat.resize(2 * static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double a = kTwoPi * i / n;
    g.flat[2 * i] = std::cos(a);
    g.flat[2 * i + 1] = std::sin(a);
  }
  return g;
}

void empirical_ntk(const nets::TwoLayerNet& net, const double* x,
                   const double* xt, double* out, nets::NetWorkspace& ws) {
  const simd::Kernels& k = simd::active();
  const size_t p = static_cast<size_t>(net.p);
  if (static_cast<int>(ws.u.size()) < net.p) ws.u.resize(net.p);
  if (static_cast<int>(ws.e.size()) < net.p) ws.e.resize(net.p);
  double* u = ws.u.data();
  double* v = ws.e.data();
  if (net.d == 2) {
    k.pair_matvec2(net.w.data(), x[0], x[1], u, p);
    k.pair_matvec2(net.w.data(), xt[0], xt[1], v, p);
  } else {
    for (int j = 0; j < net.p; ++j) {
      u[j] = k.dot(net.w.data() + static_cast<size_t>(j) * net.d, x,
                   static_cast<size_t>(net.d));
      v[j] = k.dot(net.w.data() + static_cast<size_t>(j) * net.d, xt,
                   static_cast<size_t>(net.d));
    }
  }
  const double diag = k.relu_dot(u, v, p);
  double xdot = 0.0;
  for (int m = 0; m < net.d; ++m) xdot += x[m] * xt[m];
  const double inv_p = 1.0 / static_cast<double>(net.p);
  for (int r = 0; r < net.q; ++r) {
    for (int c = 0; c < net.q; ++c) {
      double val = (r == c) ? diag : 0.0;
      val += xdot * k.gated_dot(net.a.data() + static_cast<size_t>(r) * p,
                                net.a.data() + static_cast<size_t>(c) * p, u, v,
                                p);
      out[static_cast<size_t>(r) * net.q + c] = inv_p * val;
    }
  }
}

KernelField empirical_ntk_field(const nets::TwoLayerNet& net) {
  KernelField f;
  f.q = net.q;
  f.dim = net.d;
  f.tag = "empirical-p" + std::to_string(net.p);
  auto snap = std::make_shared<nets::TwoLayerNet>(net);
  auto ws = std::make_shared<nets::NetWorkspace>();
  f.eval = [snap, ws](const double* x, const double* xt, double* out) {
    empirical_ntk(*snap, x, xt, out, *ws);
  };
  return f;
}

double limiting_ntk_scalar(const double* x, const double* xt, int dim) {
  double nx = 0.0, nxt = 0.0, dot = 0.0;
  for (int m = 0; m < dim; ++m) {
    nx += x[m] * x[m];
    nxt += xt[m] * xt[m];
    dot += x[m] * xt[m];
  }
  nx = std::sqrt(nx);
  nxt = std::sqrt(nxt);
  if (nx == 0.0 || nxt == 0.0) return 0.0;
  double c = dot / (nx * nxt);
  c = std::min(1.0, std::max(-1.0, c));
  const double a = std::acos(c);
  // Order-one arc-cosine kernel: E[relu(w.x) relu(w.x')] for w ~ N(0, I).
  return nx * nxt / (2.0 * kPi) * (std::sin(a) + (kPi - a) * c);
}

KernelField limiting_ntk_field(int q, int dim) {
  KernelField f;
  f.q = q;
  f.dim = dim;
  f.tag = "limiting";
  f.eval = [q, dim](const double* x, const double* xt, double* out) {
    const double v = limiting_ntk_scalar(x, xt, dim);
    for (int r = 0; r < q; ++r)
      for (int c = 0; c < q; ++c)
        out[static_cast<size_t>(r) * q + c] = (r == c) ? v : 0.0;
  };
  return f;
}

McKernelEstimate limiting_ntk_mc(const double* x, const double* xt, int dim,
                                 long n_draws, Rng& rng) {
  if (n_draws < 2) throw std::invalid_argument("limiting_ntk_mc: need >= 2 draws");
  double sum = 0.0, sumsq = 0.0;
  std::vector<double> w(dim);
  for (long i = 0; i < n_draws; ++i) {
    double ux = 0.0, uxt = 0.0;
    for (int m = 0; m < dim; ++m) {
      const double wm = randn(rng);
      ux += wm * x[m];
      uxt += wm * xt[m];
    }
    const double prod = std::max(ux, 0.0) * std::max(uxt, 0.0);
    sum += prod;
    sumsq += prod * prod;
  }
  McKernelEstimate est;
  est.mean = sum / n_draws;
  const double var =
      std::max(0.0, (sumsq - sum * sum / n_draws) / (n_draws - 1.0));
  est.se = std::sqrt(var / n_draws);
  return est;
}

namespace {

double frobenius_distance(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

double kernel_sup_distance(const KernelField& a, const KernelField& b,
                           const Grid& grid) {
  if (a.q != b.q) throw std::invalid_argument("sup distance: q mismatch");
  if (a.dim != grid.dim || b.dim != grid.dim)
    throw std::invalid_argument("sup distance: grid dim mismatch");
  const int q = a.q;
  std::vector<double> ka(static_cast<size_t>(q) * q),
      kb(static_cast<size_t>(q) * q);
  double sup = 0.0;
  for (int n = 0; n < grid.size(); ++n) {
    for (int m = n; m < grid.size(); ++m) {
      a.eval(grid.point(n), grid.point(m), ka.data());
      b.eval(grid.point(n), grid.point(m), kb.data());
      sup = std::max(sup, frobenius_distance(ka.data(), kb.data(), q * q));
    }
  }
  return sup;
}

std::vector<double> kernel_drift(const std::vector<nets::TwoLayerNet>& snaps,
                                 const Grid& grid) {
  if (snaps.empty()) return {};
  const KernelField base = empirical_ntk_field(snaps.front());
  std::vector<double> out;
  out.reserve(snaps.size());
  for (const auto& net : snaps)
    out.push_back(kernel_sup_distance(empirical_ntk_field(net), base, grid));
  return out;
}

std::vector<double> grid_gram(const KernelField& k, const Grid& grid) {
  if (k.dim != grid.dim) throw std::invalid_argument("grid_gram: dim mismatch");
  const int n = grid.size();
  const int q = k.q;
  const int big = n * q;
  std::vector<double> gram(static_cast<size_t>(big) * big, 0.0);
  std::vector<double> block(static_cast<size_t>(q) * q);
  // Each unordered pair is evaluated once; the mirror block is the transpose,
  // so the result is symmetric up to asymmetry inside diagonal blocks.
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      k.eval(grid.point(i), grid.point(j), block.data());
      for (int r = 0; r < q; ++r)
        for (int c = 0; c < q; ++c) {
          const double v = block[static_cast<size_t>(r) * q + c];
          gram[static_cast<size_t>(i * q + r) * big + (j * q + c)] = v;
          gram[static_cast<size_t>(j * q + c) * big + (i * q + r)] = v;
        }
    }
  }
  for (int row = 0; row < big; ++row)
    for (int col = 0; col < row; ++col) {
      const double avg = 0.5 * (gram[static_cast<size_t>(col) * big + row] +
                                gram[static_cast<size_t>(row) * big + col]);
      gram[static_cast<size_t>(row) * big + col] = avg;
      gram[static_cast<size_t>(col) * big + row] = avg;
    }
  return gram;
}

double gram_min_eigenvalue(const KernelField& k, const Grid& grid) {
  const int n = grid.size();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      bool same = true;
      for (int m = 0; m < grid.dim; ++m)
        if (grid.point(i)[m] != grid.point(j)[m]) { same = false; break; }
      if (same)
        std::fprintf(stderr,
                     "gram_min_eigenvalue: duplicate grid points %d and %d "
                     "(zero eigenvalue expected)\n",
                     i, j);
    }
  const std::vector<double> gram = grid_gram(k, grid);
  const int big = n * k.q;
  Eigen::Map<const Eigen::MatrixXd> g(gram.data(), big, big);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("gram_min_eigenvalue: eigensolver failed");
  return solver.eigenvalues().minCoeff();
}

}  // namespace npeflow::ntk
