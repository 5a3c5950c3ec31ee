#include "npeflow/simd.hpp"

#include <cmath>

namespace npeflow::simd {
namespace {

double s_dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double s_sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

void s_axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_scale(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void s_relu(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

double s_relu_dot(const double* u, const double* v, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = u[i] > 0.0 ? u[i] : 0.0;
    const double b = v[i] > 0.0 ? v[i] : 0.0;
    acc += a * b;
  }
  return acc;
}

double s_gated_dot(const double* a, const double* b,
                   const double* u, const double* v, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (u[i] > 0.0 && v[i] > 0.0) acc += a[i] * b[i];
  return acc;
}

void s_pair_matvec2(const double* wp, double x0, double x1,
                    double* u, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) u[j] = wp[2 * j] * x0 + wp[2 * j + 1] * x1;
}

void s_pair_outer_accum2(const double* s, double x0, double x1,
                         double* out, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    out[2 * j] += s[j] * x0;
    out[2 * j + 1] += s[j] * x1;
  }
}

void s_adam_update(double* p, const double* g, double* m, double* v,
                   std::size_t n, double b1, double b2, double eps,
                   double step, double c1, double c2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    p[i] -= step * (m[i] * c1) / (std::sqrt(v[i] * c2) + eps);
  }
}

void s_dense_fwd_relu(const double* w, const double* b, const double* x,
                      double* y, std::size_t h_out, std::size_t h_in,
                      std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double* xc = x + j * h_in;
    double* yc = y + j * h_out;
    for (std::size_t o = 0; o < h_out; ++o) {
      const double* wr = w + o * h_in;
      double acc = b[o];
      for (std::size_t k = 0; k < h_in; ++k) acc += wr[k] * xc[k];
      yc[o] = acc > 0.0 ? acc : 0.0;
    }
  }
}

void s_accum_outer(const double* g, const double* h, double* c,
                   std::size_t h_out, std::size_t h_in, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double* gc = g + j * h_out;
    const double* hc = h + j * h_in;
    for (std::size_t o = 0; o < h_out; ++o) {
      const double go = gc[o];
      if (go == 0.0) continue;
      double* cr = c + o * h_in;
      for (std::size_t i = 0; i < h_in; ++i) cr[i] += go * hc[i];
    }
  }
}

void s_matvec_t_batch(const double* w, const double* g, double* o,
                      std::size_t h_out, std::size_t h_in, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double* gc = g + j * h_out;
    double* oc = o + j * h_in;
    for (std::size_t i = 0; i < h_in; ++i) oc[i] = 0.0;
    for (std::size_t r = 0; r < h_out; ++r) {
      const double gr = gc[r];
      if (gr == 0.0) continue;
      const double* wr = w + r * h_in;
      for (std::size_t i = 0; i < h_in; ++i) oc[i] += gr * wr[i];
    }
  }
}

constexpr Kernels kScalar = {
    "scalar",        s_dot,          s_sum,
    s_axpy,          s_scale,        s_relu,
    s_relu_dot,      s_gated_dot,    s_pair_matvec2,
    s_pair_outer_accum2, s_adam_update,
    s_dense_fwd_relu, s_accum_outer, s_matvec_t_batch,
};

}  // namespace

const Kernels& scalar() { return kScalar; }

}  // namespace npeflow::simd
