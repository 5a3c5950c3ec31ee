// NEON (aarch64) variants; two float64 lanes. Compiled only on arm64 targets,
// where advanced SIMD is architecturally guaranteed.

#include "npeflow/simd.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>
#include <cmath>

namespace npeflow::simd {
namespace {

double v_dot(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vfmaq_f64(acc, vld1q_f64(x + i), vld1q_f64(y + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double v_sum(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

void v_axpy(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void v_scale(double a, double* x, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void v_relu(const double* x, double* y, std::size_t n) {
  const float64x2_t z = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vmaxq_f64(vld1q_f64(x + i), z));
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

double v_relu_dot(const double* u, const double* v, std::size_t n) {
  const float64x2_t z = vdupq_n_f64(0.0);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vfmaq_f64(acc, vmaxq_f64(vld1q_f64(u + i), z), vmaxq_f64(vld1q_f64(v + i), z));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double a = u[i] > 0.0 ? u[i] : 0.0;
    const double b = v[i] > 0.0 ? v[i] : 0.0;
    s += a * b;
  }
  return s;
}

double v_gated_dot(const double* a, const double* b,
                   const double* u, const double* v, std::size_t n) {
  const float64x2_t z = vdupq_n_f64(0.0);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const uint64x2_t m = vandq_u64(vcgtq_f64(vld1q_f64(u + i), z),
                                   vcgtq_f64(vld1q_f64(v + i), z));
    const float64x2_t prod = vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vaddq_f64(acc, vreinterpretq_f64_u64(
                             vandq_u64(vreinterpretq_u64_f64(prod), m)));
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i)
    if (u[i] > 0.0 && v[i] > 0.0) s += a[i] * b[i];
  return s;
}

void v_pair_matvec2(const double* wp, double x0, double x1,
                    double* u, std::size_t n) {
  const float64x2_t vx = {x0, x1};
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) {
    const float64x2_t a = vmulq_f64(vld1q_f64(wp + 2 * j), vx);
    const float64x2_t b = vmulq_f64(vld1q_f64(wp + 2 * j + 2), vx);
    vst1q_f64(u + j, vpaddq_f64(a, b));
  }
  for (; j < n; ++j) u[j] = wp[2 * j] * x0 + wp[2 * j + 1] * x1;
}

void v_pair_outer_accum2(const double* s, double x0, double x1,
                         double* out, std::size_t n) {
  const float64x2_t vx = {x0, x1};
  for (std::size_t j = 0; j < n; ++j) {
    const float64x2_t sv = vdupq_n_f64(s[j]);
    double* o = out + 2 * j;
    vst1q_f64(o, vfmaq_f64(vld1q_f64(o), sv, vx));
  }
}

void v_adam_update(double* p, const double* g, double* m, double* v,
                   std::size_t n, double b1, double b2, double eps,
                   double step, double c1, double c2) {
  const float64x2_t vb1 = vdupq_n_f64(b1), vb1c = vdupq_n_f64(1.0 - b1);
  const float64x2_t vb2 = vdupq_n_f64(b2), vb2c = vdupq_n_f64(1.0 - b2);
  const float64x2_t veps = vdupq_n_f64(eps), vstep = vdupq_n_f64(step);
  const float64x2_t vc1 = vdupq_n_f64(c1), vc2 = vdupq_n_f64(c2);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t gi = vld1q_f64(g + i);
    const float64x2_t mi = vfmaq_f64(vmulq_f64(vb1c, gi), vb1, vld1q_f64(m + i));
    const float64x2_t vi =
        vfmaq_f64(vmulq_f64(vb2c, vmulq_f64(gi, gi)), vb2, vld1q_f64(v + i));
    vst1q_f64(m + i, mi);
    vst1q_f64(v + i, vi);
    const float64x2_t den = vaddq_f64(vsqrtq_f64(vmulq_f64(vi, vc2)), veps);
    const float64x2_t upd = vdivq_f64(vmulq_f64(mi, vc1), den);
    vst1q_f64(p + i, vfmsq_f64(vld1q_f64(p + i), vstep, upd));
  }
  for (; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    p[i] -= step * (m[i] * c1) / (std::sqrt(v[i] * c2) + eps);
  }
}

// 2 output rows x 2 element columns per tile, sharing W-row and x-column
// loads across the tile.
void v_dense_fwd_relu(const double* w, const double* b, const double* x,
                      double* y, std::size_t h_out, std::size_t h_in,
                      std::size_t n) {
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) {
    const double* x0 = x + j * h_in;
    const double* x1 = x0 + h_in;
    double* y0 = y + j * h_out;
    double* y1 = y0 + h_out;
    std::size_t o = 0;
    for (; o + 2 <= h_out; o += 2) {
      const double* w0 = w + o * h_in;
      const double* w1 = w0 + h_in;
      float64x2_t a00 = vdupq_n_f64(0.0), a01 = vdupq_n_f64(0.0);
      float64x2_t a10 = vdupq_n_f64(0.0), a11 = vdupq_n_f64(0.0);
      std::size_t k = 0;
      for (; k + 2 <= h_in; k += 2) {
        const float64x2_t xv0 = vld1q_f64(x0 + k);
        const float64x2_t xv1 = vld1q_f64(x1 + k);
        float64x2_t wv = vld1q_f64(w0 + k);
        a00 = vfmaq_f64(a00, wv, xv0);
        a01 = vfmaq_f64(a01, wv, xv1);
        wv = vld1q_f64(w1 + k);
        a10 = vfmaq_f64(a10, wv, xv0);
        a11 = vfmaq_f64(a11, wv, xv1);
      }
      double s00 = vaddvq_f64(a00), s01 = vaddvq_f64(a01);
      double s10 = vaddvq_f64(a10), s11 = vaddvq_f64(a11);
      for (; k < h_in; ++k) {
        const double xk0 = x0[k], xk1 = x1[k];
        s00 += w0[k] * xk0;
        s01 += w0[k] * xk1;
        s10 += w1[k] * xk0;
        s11 += w1[k] * xk1;
      }
      s00 += b[o];
      s01 += b[o];
      s10 += b[o + 1];
      s11 += b[o + 1];
      y0[o] = s00 > 0.0 ? s00 : 0.0;
      y1[o] = s01 > 0.0 ? s01 : 0.0;
      y0[o + 1] = s10 > 0.0 ? s10 : 0.0;
      y1[o + 1] = s11 > 0.0 ? s11 : 0.0;
    }
    for (; o < h_out; ++o) {
      const double* wr = w + o * h_in;
      const double s0 = b[o] + v_dot(wr, x0, h_in);
      const double s1 = b[o] + v_dot(wr, x1, h_in);
      y0[o] = s0 > 0.0 ? s0 : 0.0;
      y1[o] = s1 > 0.0 ? s1 : 0.0;
    }
  }
  for (; j < n; ++j) {
    const double* xc = x + j * h_in;
    double* yc = y + j * h_out;
    for (std::size_t o = 0; o < h_out; ++o) {
      const double acc = b[o] + v_dot(w + o * h_in, xc, h_in);
      yc[o] = acc > 0.0 ? acc : 0.0;
    }
  }
}

// Accumulator tiles of 2 rows x 4 columns of C held in registers across the
// batch.
void v_accum_outer(const double* g, const double* h, double* c,
                   std::size_t h_out, std::size_t h_in, std::size_t n) {
  std::size_t o = 0;
  for (; o + 2 <= h_out; o += 2) {
    double* c0 = c + o * h_in;
    double* c1 = c0 + h_in;
    std::size_t i = 0;
    for (; i + 4 <= h_in; i += 4) {
      float64x2_t a0l = vld1q_f64(c0 + i), a0h = vld1q_f64(c0 + i + 2);
      float64x2_t a1l = vld1q_f64(c1 + i), a1h = vld1q_f64(c1 + i + 2);
      for (std::size_t j = 0; j < n; ++j) {
        const double* gc = g + j * h_out + o;
        const double* hc = h + j * h_in + i;
        const float64x2_t hl = vld1q_f64(hc);
        const float64x2_t hh = vld1q_f64(hc + 2);
        float64x2_t gv = vdupq_n_f64(gc[0]);
        a0l = vfmaq_f64(a0l, gv, hl);
        a0h = vfmaq_f64(a0h, gv, hh);
        gv = vdupq_n_f64(gc[1]);
        a1l = vfmaq_f64(a1l, gv, hl);
        a1h = vfmaq_f64(a1h, gv, hh);
      }
      vst1q_f64(c0 + i, a0l);
      vst1q_f64(c0 + i + 2, a0h);
      vst1q_f64(c1 + i, a1l);
      vst1q_f64(c1 + i + 2, a1h);
    }
    for (; i < h_in; ++i) {
      double s0 = 0.0, s1 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double* gc = g + j * h_out + o;
        const double hv = h[j * h_in + i];
        s0 += gc[0] * hv;
        s1 += gc[1] * hv;
      }
      c0[i] += s0;
      c1[i] += s1;
    }
  }
  for (; o < h_out; ++o) {
    double* cr = c + o * h_in;
    for (std::size_t j = 0; j < n; ++j) {
      const double go = g[j * h_out + o];
      if (go == 0.0) continue;
      v_axpy(go, h + j * h_in, cr, h_in);
    }
  }
}

void v_matvec_t_batch(const double* w, const double* g, double* o,
                      std::size_t h_out, std::size_t h_in, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double* gc = g + j * h_out;
    double* oc = o + j * h_in;
    std::size_t i = 0;
    for (; i + 8 <= h_in; i += 8) {
      float64x2_t a0 = vdupq_n_f64(0.0), a1 = vdupq_n_f64(0.0);
      float64x2_t a2 = vdupq_n_f64(0.0), a3 = vdupq_n_f64(0.0);
      for (std::size_t r = 0; r < h_out; ++r) {
        const double gr = gc[r];
        if (gr == 0.0) continue;
        const double* wr = w + r * h_in + i;
        const float64x2_t gv = vdupq_n_f64(gr);
        a0 = vfmaq_f64(a0, gv, vld1q_f64(wr));
        a1 = vfmaq_f64(a1, gv, vld1q_f64(wr + 2));
        a2 = vfmaq_f64(a2, gv, vld1q_f64(wr + 4));
        a3 = vfmaq_f64(a3, gv, vld1q_f64(wr + 6));
      }
      vst1q_f64(oc + i, a0);
      vst1q_f64(oc + i + 2, a1);
      vst1q_f64(oc + i + 4, a2);
      vst1q_f64(oc + i + 6, a3);
    }
    for (; i + 2 <= h_in; i += 2) {
      float64x2_t a0 = vdupq_n_f64(0.0);
      for (std::size_t r = 0; r < h_out; ++r) {
        const double gr = gc[r];
        if (gr == 0.0) continue;
        a0 = vfmaq_f64(a0, vdupq_n_f64(gr), vld1q_f64(w + r * h_in + i));
      }
      vst1q_f64(oc + i, a0);
    }
    for (; i < h_in; ++i) {
      double acc = 0.0;
      for (std::size_t r = 0; r < h_out; ++r) acc += gc[r] * w[r * h_in + i];
      oc[i] = acc;
    }
  }
}

constexpr Kernels kNeon = {
    "neon",          v_dot,          v_sum,
    v_axpy,          v_scale,        v_relu,
    v_relu_dot,      v_gated_dot,    v_pair_matvec2,
    v_pair_outer_accum2, v_adam_update,
    v_dense_fwd_relu, v_accum_outer, v_matvec_t_batch,
};

}  // namespace

const Kernels& neon() { return kNeon; }

}  // namespace npeflow::simd

#endif  // __aarch64__
