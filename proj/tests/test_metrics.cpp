#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "npeflow/kgf.hpp"
#include "npeflow/metrics.hpp"

using namespace npeflow;
using dv = std::vector<double>;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// posterior first-moment magnitude for sigma = 0.5 (exp(-sigma^2 / 2))
const double kRhoStar = std::exp(-0.125);

// von Mises parameters matched to the exact posterior around x
dv posterior_vm_eta(std::array<double, 2> x) {
  const double alpha = std::atan2(x[1], x[0]);
  return kgf::moment_match_solve(
      expfam::FamilyKind::VonMisesNatural,
      dv{kRhoStar * std::cos(alpha), kRhoStar * std::sin(alpha)});
}

}  // namespace

TEST_CASE("toy evaluation set") {
  models::ToyRotationModel model;
  Rng r1 = make_rng(801);
  const metrics::ToyEvalSet a = metrics::make_toy_evalset(model, 50, r1);
  REQUIRE(a.thetas.size() == 50);
  REQUIRE(a.xs.size() == 50);
  for (size_t i = 0; i < a.xs.size(); ++i) {
    CHECK(a.thetas[i] >= 0.0);
    CHECK(a.thetas[i] < kTwoPi);
    CHECK(std::hypot(a.xs[i][0], a.xs[i][1]) == doctest::Approx(1.0).epsilon(1e-12));
  }
  Rng r2 = make_rng(801);
  const metrics::ToyEvalSet b = metrics::make_toy_evalset(model, 50, r2);
  CHECK(a.thetas == b.thetas);
  CHECK(a.xs == b.xs);
}

TEST_CASE("exact posterior NLL equals the wrapped-normal entropy") {
  // p(theta | x) is the same wrapped normal around every x, so the expected
  // score is its differential entropy, close to 0.5 log(2 pi e sigma^2).
  models::ToyRotationModel model;
  Rng rng = make_rng(802);
  const metrics::ToyEvalSet eval = metrics::make_toy_evalset(model, 1500, rng);
  const double nll = metrics::exact_posterior_nll(model, eval);
  // quadrature value of the entropy for sigma = 0.5: 0.7257913516
  CHECK(nll == doctest::Approx(0.725791351631657).epsilon(0.12));
}

TEST_CASE("held-out NLL of the moment-matched posterior beats a flat guess") {
  models::ToyRotationModel model;
  Rng rng = make_rng(803);
  const metrics::ToyEvalSet eval = metrics::make_toy_evalset(model, 1500, rng);
  const double exact = metrics::exact_posterior_nll(model, eval);

  auto encode = [](const double* x, double* eta) {
    const dv e = posterior_vm_eta({x[0], x[1]});
    eta[0] = e[0];
    eta[1] = e[1];
  };
  const double matched = metrics::heldout_nll(
      encode, expfam::FamilyKind::VonMisesNatural, eval);
  // the matched von Mises can't beat the exact posterior on average, and the
  // residual KL(wrapped normal || von Mises) is small
  CHECK(matched >= exact - 0.02);
  CHECK(matched <= exact + 0.05);

  auto flat = [](const double*, double* eta) {
    eta[0] = 1e-9;
    eta[1] = 0.0;
  };
  const double uniform_nll =
      metrics::heldout_nll(flat, expfam::FamilyKind::VonMisesNatural, eval);
  CHECK(uniform_nll == doctest::Approx(std::log(kTwoPi)).epsilon(1e-6));
  CHECK(matched < uniform_nll);
}

TEST_CASE("quadrature KL reference values") {
  models::ToyRotationModel model;
  const std::array<double, 2> x = {std::cos(0.7), std::sin(0.7)};

  // matched q: KL is the small wrapped-normal-to-von-Mises gap
  const dv eta_star = posterior_vm_eta(x);
  const double kl_star = metrics::toy_quadrature_kl(
      model, x, expfam::FamilyKind::VonMisesNatural, eta_star);
  CHECK(kl_star >= 0.0);
  CHECK(kl_star < 0.01);

  // nearly-flat q: KL approaches log(2 pi) - H(posterior)
  const double kl_flat = metrics::toy_quadrature_kl(
      model, x, expfam::FamilyKind::VonMisesNatural, dv{1e-12, 0.0});
  CHECK(kl_flat == doctest::Approx(std::log(kTwoPi) - 0.725791351631657)
                       .epsilon(1e-6));

  // rotating q away from the posterior mean increases the KL
  const double ang = std::atan2(eta_star[1], eta_star[0]);
  const double kappa = std::hypot(eta_star[0], eta_star[1]);
  const dv eta_off = {kappa * std::cos(ang + 1.0), kappa * std::sin(ang + 1.0)};
  const double kl_off = metrics::toy_quadrature_kl(
      model, x, expfam::FamilyKind::VonMisesNatural, eta_off);
  CHECK(kl_off > kl_star + 0.1);
}

TEST_CASE("importance-sampled KL matches quadrature") {
  models::ToyRotationModel model;
  const std::array<double, 2> x = {std::cos(2.1), std::sin(2.1)};
  const dv eta_star = posterior_vm_eta(x);
  const double ang = std::atan2(eta_star[1], eta_star[0]);
  const double kappa = std::hypot(eta_star[0], eta_star[1]);

  const std::vector<dv> etas = {
      eta_star,                                              // matched
      {0.3 * std::cos(ang), 0.3 * std::sin(ang)},            // underconfident
      {kappa * std::cos(ang + 0.8), kappa * std::sin(ang + 0.8)},  // rotated
  };
  Rng rng = make_rng(804);
  for (size_t i = 0; i < etas.size(); ++i) {
    CAPTURE(i);
    const double oracle = metrics::toy_quadrature_kl(
        model, x, expfam::FamilyKind::VonMisesNatural, etas[i]);
    const metrics::SnisResult snis = metrics::toy_snis_forward_kl(
        model, x, expfam::FamilyKind::VonMisesNatural, etas[i], 10000, rng);
    CHECK(std::fabs(snis.kl - oracle) <= 0.05);
    CHECK(snis.ess > 1000.0);  // prior proposal against a mild posterior
    // log_z estimates log integral of the likelihood over the prior
    const models::ToyPosterior post = models::toy_posterior_oracle(model, x);
    CHECK(snis.log_z == doctest::Approx(post.log_normalizer - std::log(kTwoPi))
                            .epsilon(0.05)
                            .scale(1.0));
  }
}

TEST_CASE("generic SNIS KL on a conjugate Gaussian case") {
  // prior N(0,1), likelihood N(obs | theta, 1) with obs = 0.6:
  // posterior N(0.3, 1/2); q = N(mq, vq) gives a closed-form KL.
  const double obs = 0.6;
  const double mp = 0.3, vp = 0.5;
  const double mq = 0.1, vq = 0.8;
  auto log_norm = [](double t, double m, double v) {
    return -0.5 * std::log(kTwoPi * v) - 0.5 * (t - m) * (t - m) / v;
  };
  const double kl_exact = 0.5 * (std::log(vq / vp) + (vp + (mp - mq) * (mp - mq)) / vq - 1.0);
  Rng rng = make_rng(805);
  const metrics::SnisResult snis = metrics::snis_forward_kl(
      [](Rng& r) { return randn(r); },
      [&](double t) { return log_norm(t, 0.0, 1.0); },
      [&](double t) { return log_norm(obs, t, 1.0); },
      [&](double t) { return log_norm(t, mq, vq); }, 20000, rng);
  CHECK(std::fabs(snis.kl - kl_exact) <= 0.03);
  // log evidence: N(obs | 0, 2)
  CHECK(snis.log_z == doctest::Approx(log_norm(obs, 0.0, 2.0)).epsilon(0.02));
  CHECK(snis.ess > 2000.0);
  CHECK(snis.ess <= 20000.0);
}

TEST_CASE("clustering report") {
  const dv z_true = {-2.0, 0.5, 3.0};
  // natural-parameter factors: q(s) = N(1.5, 0.25), q(z_j) ~ means close to
  // the truth but with the middle two swapped in one scenario
  auto nat = [](double mean, double var) {
    return dv{mean / var, -0.5 / var};
  };
  const dv eta_s = nat(1.5, 0.25);
  dv eta_z;
  for (double m : {-2.1, 0.7, 2.8}) {
    const dv e = nat(m, 0.1);
    eta_z.insert(eta_z.end(), e.begin(), e.end());
  }
  const metrics::ClusteringReport rep = metrics::clustering_report(
      expfam::FamilyKind::GaussianNatural, eta_s, eta_z, z_true);
  CHECK(rep.mode_s == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(rep.z_l1 == doctest::Approx(0.1 + 0.2 + 0.2).epsilon(1e-12));
  CHECK(rep.z_ordered);

  dv eta_z_swapped;
  for (double m : {0.7, -2.1, 2.8}) {
    const dv e = nat(m, 0.1);
    eta_z_swapped.insert(eta_z_swapped.end(), e.begin(), e.end());
  }
  const metrics::ClusteringReport swapped = metrics::clustering_report(
      expfam::FamilyKind::GaussianNatural, eta_s, eta_z_swapped, z_true);
  CHECK(!swapped.z_ordered);
  CHECK(swapped.z_l1 == doctest::Approx(2.7 + 2.6 + 0.2).epsilon(1e-12));

  // mean-only family: eta is the mean itself
  const metrics::ClusteringReport mean_rep = metrics::clustering_report(
      expfam::FamilyKind::GaussianMeanOnly, dv{1.5}, dv{-2.1, 0.7, 2.8},
      z_true);
  CHECK(mean_rep.mode_s == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(mean_rep.z_l1 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(mean_rep.z_ordered);
}

TEST_CASE("kernel density estimate") {
  Rng rng = make_rng(806);
  dv values(4000);
  for (double& v : values) v = 2.0 + 0.7 * randn(rng);
  const metrics::KdeCurve kde = metrics::kde_curve(values);
  REQUIRE(kde.grid.size() == 256);
  REQUIRE(kde.density.size() == 256);
  CHECK(kde.bandwidth > 0.0);

  // trapezoid mass close to one (tails truncated at the grid edges)
  double mass = 0.0;
  for (size_t i = 1; i < kde.grid.size(); ++i)
    mass += 0.5 * (kde.density[i] + kde.density[i - 1]) *
            (kde.grid[i] - kde.grid[i - 1]);
  CHECK(mass == doctest::Approx(1.0).epsilon(0.02));

  // peak near the sample mean
  const size_t arg_max =
      std::max_element(kde.density.begin(), kde.density.end()) -
      kde.density.begin();
  CHECK(std::fabs(kde.grid[arg_max] - 2.0) < 0.15);

  // explicit bandwidth is honored
  const metrics::KdeCurve wide = metrics::kde_curve(values, 1.5, 64);
  CHECK(wide.bandwidth == 1.5);
  REQUIRE(wide.grid.size() == 64);
  const double peak_wide =
      *std::max_element(wide.density.begin(), wide.density.end());
  const double peak_narrow =
      *std::max_element(kde.density.begin(), kde.density.end());
  CHECK(peak_wide < peak_narrow);  // oversmoothing flattens the mode
}
