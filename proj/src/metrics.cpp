#include "npeflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace npeflow::metrics {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

ToyEvalSet make_toy_evalset(const models::ToyRotationModel& model, int n,
                            Rng& rng) {
  ToyEvalSet ev;
  ev.thetas.reserve(n);
  ev.xs.reserve(n);
  for (int i = 0; i < n; ++i) {
    const models::ToyDraw d = models::toy_sample_joint(model, rng);
    ev.thetas.push_back(d.theta);
    ev.xs.push_back(d.x);
  }
  return ev;
}

double heldout_nll(
    const std::function<void(const double* x, double* eta)>& encode_eta,
    expfam::FamilyKind family, const ToyEvalSet& eval) {
  if (eval.thetas.empty()) throw std::invalid_argument("heldout_nll: empty set");
  const int q = expfam::param_dim(family);
  std::vector<double> eta(q);
  double acc = 0.0;
  for (size_t i = 0; i < eval.thetas.size(); ++i) {
    encode_eta(eval.xs[i].data(), eta.data());
    acc -= expfam::log_density(family, eta, eval.thetas[i]);
  }
  return acc / eval.thetas.size();
}

double exact_posterior_nll(const models::ToyRotationModel& model,
                           const ToyEvalSet& eval) {
  if (eval.thetas.empty())
    throw std::invalid_argument("exact_posterior_nll: empty set");
  double acc = 0.0;
  for (size_t i = 0; i < eval.thetas.size(); ++i)
    acc -= models::toy_log_posterior(model, eval.thetas[i], eval.xs[i]);
  return acc / eval.thetas.size();
}

SnisResult snis_forward_kl(
    const std::function<double(Rng&)>& prior_sampler,
    const std::function<double(double)>& log_prior,
    const std::function<double(double)>& log_likelihood,
    const std::function<double(double)>& log_q, int n_draws, Rng& rng) {
  if (n_draws < 2) throw std::invalid_argument("snis: need >= 2 draws");
  std::vector<double> logw(n_draws), integrand(n_draws);
  for (int i = 0; i < n_draws; ++i) {
    const double theta = prior_sampler(rng);
    const double ll = log_likelihood(theta);
    logw[i] = ll;  // prior proposal: weight = likelihood
    integrand[i] = log_prior(theta) + ll - log_q(theta);
  }
  const double mx = *std::max_element(logw.begin(), logw.end());
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n_draws; ++i) {
    const double w = std::exp(logw[i] - mx);
    sum += w;
    sumsq += w * w;
  }
  SnisResult res;
  res.log_z = mx + std::log(sum / n_draws);
  res.ess = sum * sum / sumsq;
  double kl = 0.0;
  for (int i = 0; i < n_draws; ++i)
    kl += std::exp(logw[i] - mx) / sum * (integrand[i] - res.log_z);
  res.kl = kl;
  return res;
}

SnisResult toy_snis_forward_kl(const models::ToyRotationModel& model,
                               std::array<double, 2> x,
                               expfam::FamilyKind family,
                               std::span<const double> eta, int n_draws,
                               Rng& rng) {
  std::vector<double> eta_copy(eta.begin(), eta.end());
  return snis_forward_kl(
      [](Rng& r) { return randu(r) * kTwoPi; },
      [](double) { return -std::log(kTwoPi); },
      [&model, x](double theta) {
        return models::toy_log_likelihood(model, theta, x);
      },
      [family, eta_copy](double theta) {
        return expfam::log_density(family, eta_copy, theta);
      },
      n_draws, rng);
}

double toy_quadrature_kl(const models::ToyRotationModel& model,
                         std::array<double, 2> x, expfam::FamilyKind family,
                         std::span<const double> eta) {
  const models::ToyPosterior post = models::toy_posterior_oracle(model, x);
  const int n = static_cast<int>(post.grid.size());
  double kl = 0.0;
  for (int i = 0; i < n; ++i) {
    const double p = std::exp(post.log_post[i]);
    const double lq = expfam::log_density(family, eta, post.grid[i]);
    kl += p * (post.log_post[i] - lq) * (kTwoPi / n);
  }
  return kl;
}

ClusteringReport clustering_report(expfam::FamilyKind family,
                                   std::span<const double> eta_s,
                                   std::span<const double> eta_z,
                                   std::span<const double> z_true) {
  const int q = expfam::param_dim(family);
  const int d = static_cast<int>(z_true.size());
  if (static_cast<int>(eta_z.size()) != d * q)
    throw std::invalid_argument("clustering_report: eta_z has wrong length");
  ClusteringReport rep;
  rep.mode_s = expfam::mode(family, eta_s);
  std::vector<double> zhat(d);
  for (int j = 0; j < d; ++j)
    zhat[j] = expfam::mode(
        family, eta_z.subspan(static_cast<size_t>(j) * q, static_cast<size_t>(q)));
  rep.z_l1 = 0.0;
  rep.z_ordered = true;
  for (int j = 0; j < d; ++j) {
    rep.z_l1 += std::fabs(zhat[j] - z_true[j]);
    if (j > 0 && !(zhat[j] > zhat[j - 1])) rep.z_ordered = false;
  }
  return rep;
}

KdeCurve kde_curve(std::span<const double> values, double bandwidth,
                   int grid_points) {
  if (values.size() < 2) throw std::invalid_argument("kde: need >= 2 values");
  if (grid_points < 2) throw std::invalid_argument("kde: need >= 2 grid points");
  const size_t n = values.size();
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  if (bandwidth <= 0.0) {
    double mean = 0.0;
    for (double v : sorted) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : sorted) var += (v - mean) * (v - mean);
    var /= (n - 1);
    const double sd = std::sqrt(var);
    auto quantile = [&](double p) {
      const double pos = p * (n - 1);
      const size_t lo = static_cast<size_t>(pos);
      const size_t hi = std::min(lo + 1, n - 1);
      return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (spread <= 0.0) spread = std::max(sd, 1e-12);
    bandwidth = 0.9 * spread * std::pow(double(n), -0.2);
  }
  KdeCurve curve;
  curve.bandwidth = bandwidth;
  const double lo = sorted.front() - 3.0 * bandwidth;
  const double hi = sorted.back() + 3.0 * bandwidth;
  curve.grid.resize(grid_points);
  curve.density.resize(grid_points);
  const double norm = 1.0 / (n * bandwidth * std::sqrt(kTwoPi));
  for (int g = 0; g < grid_points; ++g) {
    const double t = lo + (hi - lo) * g / (grid_points - 1);
    curve.grid[g] = t;
    double acc = 0.0;
    for (double v : sorted) {
      const double u = (t - v) / bandwidth;
      acc += std::exp(-0.5 * u * u);
    }
    curve.density[g] = norm * acc;
  }
  return curve;
}

}  // namespace npeflow::metrics
