#pragma once

#include <cstddef>

// Data-parallel inner kernels used by the network, NTK, and optimizer code.
// Every kernel has a scalar reference implementation and (on matching
// hardware) a vector variant; the active table is chosen once at runtime.
// Vector variants may reassociate reductions, so results can differ from the
// scalar reference by rounding only — equivalence is tested to tight
// tolerances, and any single build/host pair always picks the same table,
// preserving bit-exact reproducibility of seeded runs.

namespace npeflow::simd {

struct Kernels {
  const char* name;

  // sum_i x[i]*y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // sum_i x[i]
  double (*sum)(const double* x, std::size_t n);
  // y[i] += a*x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // x[i] *= a
  void (*scale)(double a, double* x, std::size_t n);
  // y[i] = max(x[i], 0)
  void (*relu)(const double* x, double* y, std::size_t n);
  // sum_i max(u[i],0)*max(v[i],0)
  double (*relu_dot)(const double* u, const double* v, std::size_t n);
  // sum_i a[i]*b[i]*[u[i]>0]*[v[i]>0]   (ReLU' taken as 0 at 0)
  double (*gated_dot)(const double* a, const double* b,
                      const double* u, const double* v, std::size_t n);
  // u[j] = wp[2j]*x0 + wp[2j+1]*x1       (row-major p x 2 matrix times (x0,x1))
  void (*pair_matvec2)(const double* wp, double x0, double x1,
                       double* u, std::size_t n);
  // out[2j] += s[j]*x0; out[2j+1] += s[j]*x1   (rank-1 accumulation, d = 2)
  void (*pair_outer_accum2)(const double* s, double x0, double x1,
                            double* out, std::size_t n);
  // Adam with precomputed bias corrections c1 = 1/(1-b1^t), c2 = 1/(1-b2^t):
  //   m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g^2
  //   p -= step * (m*c1) / (sqrt(v*c2) + eps)
  void (*adam_update)(double* p, const double* g, double* m, double* v,
                      std::size_t n, double b1, double b2, double eps,
                      double step, double c1, double c2);

  // Batched dense layer over a set, one column per element:
  //   y[:,j] = max(W x[:,j] + b, 0)
  // W row-major (h_out x h_in), x/y column-major (h_in x n / h_out x n).
  void (*dense_fwd_relu)(const double* w, const double* b, const double* x,
                         double* y, std::size_t h_out, std::size_t h_in,
                         std::size_t n);
  // Batched rank-1 accumulation C += sum_j g[:,j] h[:,j]^T, i.e. C += G H^T.
  // C row-major (h_out x h_in), G/H column-major (h_out x n / h_in x n).
  void (*accum_outer)(const double* g, const double* h, double* c,
                      std::size_t h_out, std::size_t h_in, std::size_t n);
  // Batched transposed matvec o[:,j] = W^T g[:,j].
  // W row-major (h_out x h_in), G/O column-major (h_out x n / h_in x n).
  void (*matvec_t_batch)(const double* w, const double* g, double* o,
                         std::size_t h_out, std::size_t h_in, std::size_t n);
};

const Kernels& scalar();

#if defined(NPEFLOW_HAVE_AVX2_TU)
const Kernels& avx2();
#endif
#if defined(NPEFLOW_HAVE_NEON_TU)
const Kernels& neon();
#endif

// Runtime-selected table: vector kernels when the CPU supports them, the
// scalar reference otherwise. Set NPEFLOW_SIMD=scalar to force the reference.
const Kernels& active();

}  // namespace npeflow::simd
