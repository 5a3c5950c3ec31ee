// AVX2+FMA variants. This translation unit is compiled with -mavx2 -mfma and
// only ever executed after a cpuid check in dispatch.cpp.

#include "npeflow/simd.hpp"

#include <cmath>
#include <immintrin.h>

namespace npeflow::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double v_dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double v_sum(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
  double acc = hsum(acc0);
  for (; i < n; ++i) acc += x[i];
  return acc;
}

void v_axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void v_scale(double a, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void v_relu(const double* x, double* y, std::size_t n) {
  const __m256d z = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), z));
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

double v_relu_dot(const double* u, const double* v, std::size_t n) {
  const __m256d z = _mm256_setzero_pd();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_max_pd(_mm256_loadu_pd(u + i), z);
    const __m256d b = _mm256_max_pd(_mm256_loadu_pd(v + i), z);
    acc = _mm256_fmadd_pd(a, b, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double a = u[i] > 0.0 ? u[i] : 0.0;
    const double b = v[i] > 0.0 ? v[i] : 0.0;
    s += a * b;
  }
  return s;
}

double v_gated_dot(const double* a, const double* b,
                   const double* u, const double* v, std::size_t n) {
  const __m256d z = _mm256_setzero_pd();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mu = _mm256_cmp_pd(_mm256_loadu_pd(u + i), z, _CMP_GT_OQ);
    const __m256d mv = _mm256_cmp_pd(_mm256_loadu_pd(v + i), z, _CMP_GT_OQ);
    const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_and_pd(prod, _mm256_and_pd(mu, mv)));
  }
  double s = hsum(acc);
  for (; i < n; ++i)
    if (u[i] > 0.0 && v[i] > 0.0) s += a[i] * b[i];
  return s;
}

void v_pair_matvec2(const double* wp, double x0, double x1,
                    double* u, std::size_t n) {
  const __m256d vx = _mm256_set_pd(x1, x0, x1, x0);  // lanes [x0,x1,x0,x1]
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d a = _mm256_mul_pd(_mm256_loadu_pd(wp + 2 * j), vx);
    const __m256d b = _mm256_mul_pd(_mm256_loadu_pd(wp + 2 * j + 4), vx);
    // hadd gives [u_j, u_{j+2}, u_{j+1}, u_{j+3}]; permute back to order.
    const __m256d h = _mm256_hadd_pd(a, b);
    _mm256_storeu_pd(u + j, _mm256_permute4x64_pd(h, 0xD8));
  }
  for (; j < n; ++j) u[j] = wp[2 * j] * x0 + wp[2 * j + 1] * x1;
}

void v_pair_outer_accum2(const double* s, double x0, double x1,
                         double* out, std::size_t n) {
  const __m256d vx = _mm256_set_pd(x1, x0, x1, x0);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d s4 = _mm256_loadu_pd(s + j);
    const __m256d lo = _mm256_permute4x64_pd(s4, 0x50);  // [s0,s0,s1,s1]
    const __m256d hi = _mm256_permute4x64_pd(s4, 0xFA);  // [s2,s2,s3,s3]
    double* o = out + 2 * j;
    _mm256_storeu_pd(o, _mm256_fmadd_pd(lo, vx, _mm256_loadu_pd(o)));
    _mm256_storeu_pd(o + 4, _mm256_fmadd_pd(hi, vx, _mm256_loadu_pd(o + 4)));
  }
  for (; j < n; ++j) {
    out[2 * j] += s[j] * x0;
    out[2 * j + 1] += s[j] * x1;
  }
}

void v_adam_update(double* p, const double* g, double* m, double* v,
                   std::size_t n, double b1, double b2, double eps,
                   double step, double c1, double c2) {
  const __m256d vb1 = _mm256_set1_pd(b1), vb1c = _mm256_set1_pd(1.0 - b1);
  const __m256d vb2 = _mm256_set1_pd(b2), vb2c = _mm256_set1_pd(1.0 - b2);
  const __m256d veps = _mm256_set1_pd(eps), vstep = _mm256_set1_pd(step);
  const __m256d vc1 = _mm256_set1_pd(c1), vc2 = _mm256_set1_pd(c2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    const __m256d mi = _mm256_fmadd_pd(vb1, _mm256_loadu_pd(m + i), _mm256_mul_pd(vb1c, gi));
    const __m256d vi = _mm256_fmadd_pd(vb2, _mm256_loadu_pd(v + i),
                                       _mm256_mul_pd(vb2c, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d den = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vi, vc2)), veps);
    const __m256d upd = _mm256_div_pd(_mm256_mul_pd(mi, vc1), den);
    _mm256_storeu_pd(p + i, _mm256_fnmadd_pd(vstep, upd, _mm256_loadu_pd(p + i)));
  }
  for (; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    p[i] -= step * (m[i] * c1) / (std::sqrt(v[i] * c2) + eps);
  }
}

// 4 output rows x 2 element columns per tile; the shared W-row and x-column
// loads raise the FMA-per-load ratio well above the one-dot-per-row scheme.
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
    for (; o + 4 <= h_out; o += 4) {
      const double* w0 = w + o * h_in;
      const double* w1 = w0 + h_in;
      const double* w2 = w1 + h_in;
      const double* w3 = w2 + h_in;
      __m256d a00 = _mm256_setzero_pd(), a01 = _mm256_setzero_pd();
      __m256d a10 = _mm256_setzero_pd(), a11 = _mm256_setzero_pd();
      __m256d a20 = _mm256_setzero_pd(), a21 = _mm256_setzero_pd();
      __m256d a30 = _mm256_setzero_pd(), a31 = _mm256_setzero_pd();
      std::size_t k = 0;
      for (; k + 4 <= h_in; k += 4) {
        const __m256d xv0 = _mm256_loadu_pd(x0 + k);
        const __m256d xv1 = _mm256_loadu_pd(x1 + k);
        __m256d wv = _mm256_loadu_pd(w0 + k);
        a00 = _mm256_fmadd_pd(wv, xv0, a00);
        a01 = _mm256_fmadd_pd(wv, xv1, a01);
        wv = _mm256_loadu_pd(w1 + k);
        a10 = _mm256_fmadd_pd(wv, xv0, a10);
        a11 = _mm256_fmadd_pd(wv, xv1, a11);
        wv = _mm256_loadu_pd(w2 + k);
        a20 = _mm256_fmadd_pd(wv, xv0, a20);
        a21 = _mm256_fmadd_pd(wv, xv1, a21);
        wv = _mm256_loadu_pd(w3 + k);
        a30 = _mm256_fmadd_pd(wv, xv0, a30);
        a31 = _mm256_fmadd_pd(wv, xv1, a31);
      }
      double s00 = hsum(a00), s01 = hsum(a01), s10 = hsum(a10),
             s11 = hsum(a11), s20 = hsum(a20), s21 = hsum(a21),
             s30 = hsum(a30), s31 = hsum(a31);
      for (; k < h_in; ++k) {
        const double xk0 = x0[k], xk1 = x1[k];
        s00 += w0[k] * xk0;
        s01 += w0[k] * xk1;
        s10 += w1[k] * xk0;
        s11 += w1[k] * xk1;
        s20 += w2[k] * xk0;
        s21 += w2[k] * xk1;
        s30 += w3[k] * xk0;
        s31 += w3[k] * xk1;
      }
      s00 += b[o];
      s10 += b[o + 1];
      s20 += b[o + 2];
      s30 += b[o + 3];
      s01 += b[o];
      s11 += b[o + 1];
      s21 += b[o + 2];
      s31 += b[o + 3];
      y0[o] = s00 > 0.0 ? s00 : 0.0;
      y0[o + 1] = s10 > 0.0 ? s10 : 0.0;
      y0[o + 2] = s20 > 0.0 ? s20 : 0.0;
      y0[o + 3] = s30 > 0.0 ? s30 : 0.0;
      y1[o] = s01 > 0.0 ? s01 : 0.0;
      y1[o + 1] = s11 > 0.0 ? s11 : 0.0;
      y1[o + 2] = s21 > 0.0 ? s21 : 0.0;
      y1[o + 3] = s31 > 0.0 ? s31 : 0.0;
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

// Accumulator tiles of 4 rows x 8 columns of C stay in registers across the
// whole batch, so C sees one load/store pair per tile instead of one per
// element.
void v_accum_outer(const double* g, const double* h, double* c,
                   std::size_t h_out, std::size_t h_in, std::size_t n) {
  std::size_t o = 0;
  for (; o + 4 <= h_out; o += 4) {
    double* c0 = c + o * h_in;
    double* c1 = c0 + h_in;
    double* c2 = c1 + h_in;
    double* c3 = c2 + h_in;
    std::size_t i = 0;
    for (; i + 8 <= h_in; i += 8) {
      __m256d a0l = _mm256_loadu_pd(c0 + i), a0h = _mm256_loadu_pd(c0 + i + 4);
      __m256d a1l = _mm256_loadu_pd(c1 + i), a1h = _mm256_loadu_pd(c1 + i + 4);
      __m256d a2l = _mm256_loadu_pd(c2 + i), a2h = _mm256_loadu_pd(c2 + i + 4);
      __m256d a3l = _mm256_loadu_pd(c3 + i), a3h = _mm256_loadu_pd(c3 + i + 4);
      for (std::size_t j = 0; j < n; ++j) {
        const double* gc = g + j * h_out + o;
        const double* hc = h + j * h_in + i;
        const __m256d hl = _mm256_loadu_pd(hc);
        const __m256d hh = _mm256_loadu_pd(hc + 4);
        __m256d gv = _mm256_broadcast_sd(gc);
        a0l = _mm256_fmadd_pd(gv, hl, a0l);
        a0h = _mm256_fmadd_pd(gv, hh, a0h);
        gv = _mm256_broadcast_sd(gc + 1);
        a1l = _mm256_fmadd_pd(gv, hl, a1l);
        a1h = _mm256_fmadd_pd(gv, hh, a1h);
        gv = _mm256_broadcast_sd(gc + 2);
        a2l = _mm256_fmadd_pd(gv, hl, a2l);
        a2h = _mm256_fmadd_pd(gv, hh, a2h);
        gv = _mm256_broadcast_sd(gc + 3);
        a3l = _mm256_fmadd_pd(gv, hl, a3l);
        a3h = _mm256_fmadd_pd(gv, hh, a3h);
      }
      _mm256_storeu_pd(c0 + i, a0l);
      _mm256_storeu_pd(c0 + i + 4, a0h);
      _mm256_storeu_pd(c1 + i, a1l);
      _mm256_storeu_pd(c1 + i + 4, a1h);
      _mm256_storeu_pd(c2 + i, a2l);
      _mm256_storeu_pd(c2 + i + 4, a2h);
      _mm256_storeu_pd(c3 + i, a3l);
      _mm256_storeu_pd(c3 + i + 4, a3h);
    }
    for (; i < h_in; ++i) {
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double* gc = g + j * h_out + o;
        const double hv = h[j * h_in + i];
        s0 += gc[0] * hv;
        s1 += gc[1] * hv;
        s2 += gc[2] * hv;
        s3 += gc[3] * hv;
      }
      c0[i] += s0;
      c1[i] += s1;
      c2[i] += s2;
      c3[i] += s3;
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
    for (; i + 16 <= h_in; i += 16) {
      __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
      __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
      for (std::size_t r = 0; r < h_out; ++r) {
        const double gr = gc[r];
        if (gr == 0.0) continue;
        const double* wr = w + r * h_in + i;
        const __m256d gv = _mm256_set1_pd(gr);
        a0 = _mm256_fmadd_pd(gv, _mm256_loadu_pd(wr), a0);
        a1 = _mm256_fmadd_pd(gv, _mm256_loadu_pd(wr + 4), a1);
        a2 = _mm256_fmadd_pd(gv, _mm256_loadu_pd(wr + 8), a2);
        a3 = _mm256_fmadd_pd(gv, _mm256_loadu_pd(wr + 12), a3);
      }
      _mm256_storeu_pd(oc + i, a0);
      _mm256_storeu_pd(oc + i + 4, a1);
      _mm256_storeu_pd(oc + i + 8, a2);
      _mm256_storeu_pd(oc + i + 12, a3);
    }
    for (; i + 4 <= h_in; i += 4) {
      __m256d a0 = _mm256_setzero_pd();
      for (std::size_t r = 0; r < h_out; ++r) {
        const double gr = gc[r];
        if (gr == 0.0) continue;
        a0 = _mm256_fmadd_pd(_mm256_set1_pd(gr),
                             _mm256_loadu_pd(w + r * h_in + i), a0);
      }
      _mm256_storeu_pd(oc + i, a0);
    }
    for (; i < h_in; ++i) {
      double acc = 0.0;
      for (std::size_t r = 0; r < h_out; ++r) acc += gc[r] * w[r * h_in + i];
      oc[i] = acc;
    }
  }
}

constexpr Kernels kAvx2 = {
    "avx2",          v_dot,          v_sum,
    v_axpy,          v_scale,        v_relu,
    v_relu_dot,      v_gated_dot,    v_pair_matvec2,
    v_pair_outer_accum2, v_adam_update,
    v_dense_fwd_relu, v_accum_outer, v_matvec_t_batch,
};

}  // namespace

const Kernels& avx2() { return kAvx2; }

}  // namespace npeflow::simd
