#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "npeflow/nets.hpp"
#include "npeflow/rng.hpp"

// Tangent-kernel diagnostics for the two-layer encoder: exact empirical
// kernel, the infinite-width limit in closed form, a Monte Carlo check of
// that closed form, and distances / Gram spectra over evaluation grids.

namespace npeflow::ntk {

// Flat list of evaluation points (size() points of dimension dim).
struct Grid {
  int dim = 0;
  std::vector<double> flat;
  int size() const { return dim ? static_cast<int>(flat.size()) / dim : 0; }
  const double* point(int n) const {
    return flat.data() + static_cast<size_t>(n) * dim;
  }
};

Grid unit_circle_grid(int n);  // equispaced on the unit circle (dim 2)

// q x q kernel block evaluator, tagged for reports.
struct KernelField {
  int q = 0;
  int dim = 0;
  std::string tag;
  std::function<void(const double* x, const double* xt, double* out)> eval;
};

// K(x, x')_{kl} = (1/p) [ 1_{k=l} sum_j relu(u_j) relu(v_j)
//                         + x.x' sum_j A_kj A_lj 1_{u_j>0} 1_{v_j>0} ],
// u = W x, v = W x'. Exact for the width-p net (snapshot by copy).
KernelField empirical_ntk_field(const nets::TwoLayerNet& net);
void empirical_ntk(const nets::TwoLayerNet& net, const double* x,
                   const double* xt, double* out, nets::NetWorkspace& ws);

// Infinite-width limit at this initialization (second layer zero): the
// arc-cosine kernel of order one on the diagonal,
//   K(x, x') = (|x||x'| / 2 pi) (sin a + (pi - a) cos a) I_q,
// a = angle between x and x'.
KernelField limiting_ntk_field(int q, int dim);
double limiting_ntk_scalar(const double* x, const double* xt, int dim);

// Monte Carlo estimate of E_w[relu(w.x) relu(w.x')], w ~ N(0, I), with its
// standard error; the independent check of the closed form above.
struct McKernelEstimate {
  double mean = 0.0;
  double se = 0.0;
};
McKernelEstimate limiting_ntk_mc(const double* x, const double* xt, int dim,
                                 long n_draws, Rng& rng);

// max over ordered grid pairs (n <= m) of the Frobenius distance between the
// two kernels' q x q blocks.
double kernel_sup_distance(const KernelField& a, const KernelField& b,
                           const Grid& grid);

// Sup-distance of each snapshot's kernel from the first snapshot's.
std::vector<double> kernel_drift(const std::vector<nets::TwoLayerNet>& snaps,
                                 const Grid& grid);

// Dense (N q) x (N q) Gram matrix, symmetrized; row-major.
std::vector<double> grid_gram(const KernelField& k, const Grid& grid);

// Smallest eigenvalue of the symmetrized Gram (duplicate grid points are
// reported to stderr — they force a zero eigenvalue).
double gram_min_eigenvalue(const KernelField& k, const Grid& grid);

}  // namespace npeflow::ntk
