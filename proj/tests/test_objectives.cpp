#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "npeflow/models.hpp"
#include "npeflow/objectives.hpp"

using namespace npeflow;
using dv = std::vector<double>;

namespace {

// Frozen-draw sampler: cycles deterministically through a fixed list, so the
// estimator becomes an exact (finite-difference-checkable) function of the
// parameters when the batch covers the whole list.
objectives::JointSampler cycle_sampler(std::shared_ptr<std::vector<models::ToyDraw>> set) {
  auto cursor = std::make_shared<size_t>(0);
  return [set, cursor](Rng&) {
    const models::ToyDraw& d = (*set)[*cursor % set->size()];
    ++*cursor;
    objectives::JointSample s;
    s.latent = {d.theta};
    s.obs = {d.x[0], d.x[1]};
    return s;
  };
}

std::shared_ptr<std::vector<models::ToyDraw>> frozen_toy_draws(int n, std::uint64_t seed) {
  models::ToyRotationModel model;
  Rng rng = make_rng(seed);
  auto set = std::make_shared<std::vector<models::ToyDraw>>();
  for (int i = 0; i < n; ++i) set->push_back(models::toy_sample_joint(model, rng));
  return set;
}

nets::TwoLayerNet audit_net(int p, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  nets::TwoLayerNet net = nets::two_layer_init(p, 2, 2, rng);
  for (auto& v : net.a) v = 0.3 * randn(rng);
  return net;
}

double frozen_loss(const nets::TwoLayerNet& proto, const dv& params,
                   const std::vector<models::ToyDraw>& set,
                   const nets::OutputMap& map) {
  nets::TwoLayerNet net = proto;
  nets::unflatten(net, params);
  nets::NetWorkspace ws;
  double acc = 0.0;
  double raw[2], eta[2];
  for (const auto& d : set) {
    nets::forward(net, d.x.data(), raw, ws);
    nets::apply_output_map(map, raw, eta);
    acc -= expfam::log_density(map.family, std::span<const double>(eta, 2),
                               d.theta);
  }
  return acc / double(set.size());
}

}  // namespace

TEST_CASE("learning-rate schedule") {
  objectives::AdamConfig cfg;
  cfg.base_lr = 0.2;
  cfg.total_steps = 0;
  CHECK(objectives::lr_schedule(cfg, 0) == 0.2);
  CHECK(objectives::lr_schedule(cfg, 100000) == 0.2);
  cfg.total_steps = 1000;  // I0 = 100
  CHECK(objectives::lr_schedule(cfg, 0) == 0.2);
  CHECK(objectives::lr_schedule(cfg, 100) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(objectives::lr_schedule(cfg, 300) == doctest::Approx(0.05).epsilon(1e-15));
}

TEST_CASE("adam and sgd steps") {
  objectives::AdamConfig cfg;
  cfg.base_lr = 0.1;
  cfg.total_steps = 0;
  objectives::AdamState st;
  st.init(1);
  dv p = {1.0}, g = {0.5};
  objectives::adam_step(st, cfg, p, g, 0);
  CHECK(st.t == 1);
  const double m = 0.1 * 0.5, v = 0.001 * 0.25;
  const double expect =
      1.0 - 0.1 * (m * 10.0) / (std::sqrt(v * 1000.0) + cfg.eps);
  CHECK(p[0] == doctest::Approx(expect).epsilon(1e-12));

  dv bad = {std::nan("")};
  CHECK_THROWS_AS(objectives::adam_step(st, cfg, p, bad, 1), std::runtime_error);

  dv sp = {2.0, -1.0}, sg = {0.5, 0.25};
  objectives::sgd_step(sp, sg, 0.1);
  CHECK(sp[0] == doctest::Approx(1.95).epsilon(1e-15));
  CHECK(sp[1] == doctest::Approx(-1.025).epsilon(1e-15));
  dv bad2 = {std::nan(""), 0.0};
  CHECK_THROWS_AS(objectives::sgd_step(sp, bad2, 0.1), std::runtime_error);
}

TEST_CASE("forward-KL estimator is exact on a single frozen draw") {
  auto set = frozen_toy_draws(1, 501);
  nets::TwoLayerNet net = audit_net(4, 502);
  const nets::OutputMap map{expfam::FamilyKind::VonMisesNatural, 1e-4};
  dv flat(net.param_count());
  nets::flatten(net, flat);

  objectives::EncoderRef enc = objectives::encoder_ref(net);
  dv grad(net.param_count());
  Rng rng = make_rng(503);
  const double value =
      objectives::fkl_gradient_estimate(cycle_sampler(set), enc, map, 3, rng, grad);
  CHECK(value == doctest::Approx(frozen_loss(net, flat, *set, map)).epsilon(1e-13));
  for (size_t i = 0; i < flat.size(); ++i) {
    const double h = 1e-6;
    dv probe = flat;
    probe[i] = flat[i] + h;
    const double up = frozen_loss(net, probe, *set, map);
    probe[i] = flat[i] - h;
    const double dn = frozen_loss(net, probe, *set, map);
    CHECK(grad[i] ==
          doctest::Approx((up - dn) / (2.0 * h)).epsilon(1e-5).scale(1e-4));
  }
}

TEST_CASE("forward-KL estimator batch-averages (cycling a frozen set)") {
  auto set = frozen_toy_draws(4, 504);
  nets::TwoLayerNet net = audit_net(4, 505);
  const nets::OutputMap map{expfam::FamilyKind::VonMisesNatural, 1e-4};
  objectives::EncoderRef enc = objectives::encoder_ref(net);
  dv grad(net.param_count());
  Rng rng = make_rng(1);
  const double value =
      objectives::fkl_gradient_estimate(cycle_sampler(set), enc, map, 4, rng, grad);

  dv mean_grad(net.param_count(), 0.0), single(net.param_count());
  double mean_value = 0.0;
  for (int i = 0; i < 4; ++i) {
    auto one = std::make_shared<std::vector<models::ToyDraw>>(
        std::vector<models::ToyDraw>{(*set)[i]});
    mean_value +=
        objectives::fkl_gradient_estimate(cycle_sampler(one), enc, map, 1, rng, single);
    for (size_t j = 0; j < single.size(); ++j) mean_grad[j] += single[j];
  }
  CHECK(value == doctest::Approx(mean_value / 4.0).epsilon(1e-13));
  for (size_t j = 0; j < grad.size(); ++j)
    CHECK(grad[j] == doctest::Approx(mean_grad[j] / 4.0).epsilon(1e-12).scale(1e-9));
}

TEST_CASE("forward-KL estimator is unbiased for the frozen empirical loss") {
  auto set = frozen_toy_draws(20, 506);
  nets::TwoLayerNet net = audit_net(4, 507);
  const nets::OutputMap map{expfam::FamilyKind::VonMisesNatural, 1e-4};
  dv flat(net.param_count());
  nets::flatten(net, flat);
  objectives::EncoderRef enc = objectives::encoder_ref(net);

  // oracle gradient of the frozen empirical loss
  dv fd(net.param_count());
  for (size_t i = 0; i < flat.size(); ++i) {
    const double h = 1e-5;
    dv probe = flat;
    probe[i] = flat[i] + h;
    const double up = frozen_loss(net, probe, *set, map);
    probe[i] = flat[i] - h;
    const double dn = frozen_loss(net, probe, *set, map);
    fd[i] = (up - dn) / (2.0 * h);
  }

  objectives::JointSampler sampler = [&set](Rng& rng) {
    const auto& d =
        (*set)[std::uniform_int_distribution<size_t>(0, set->size() - 1)(rng)];
    objectives::JointSample s;
    s.latent = {d.theta};
    s.obs = {d.x[0], d.x[1]};
    return s;
  };
  const long n_est = 4000;
  dv g(net.param_count()), mean(net.param_count(), 0.0), m2(net.param_count(), 0.0);
  Rng rng = make_rng(508);
  for (long k = 1; k <= n_est; ++k) {
    objectives::fkl_gradient_estimate(sampler, enc, map, 4, rng, g);
    for (size_t i = 0; i < g.size(); ++i) {
      const double d = g[i] - mean[i];
      mean[i] += d / double(k);
      m2[i] += d * (g[i] - mean[i]);
    }
  }
  for (size_t i = 0; i < mean.size(); ++i) {
    if (std::fabs(fd[i]) < 1e-3) continue;
    const double se = std::sqrt(m2[i] / double(n_est - 1) / double(n_est));
    CHECK(std::fabs(mean[i] - fd[i]) <= 4.0 * std::max(se, 1e-12));
  }
}

TEST_CASE("linearized encoder gradient equals the base gradient at phi0") {
  auto set = frozen_toy_draws(3, 509);
  nets::TwoLayerNet net = audit_net(6, 510);
  nets::LinearizedNet lin = nets::linearize(net);
  const nets::OutputMap map{expfam::FamilyKind::VonMisesNatural, 1e-4};
  objectives::EncoderRef enc_a = objectives::encoder_ref(net);
  objectives::EncoderRef enc_b = objectives::encoder_ref(lin);
  dv ga(net.param_count()), gb(net.param_count());
  Rng r1 = make_rng(2), r2 = make_rng(2);
  const double va =
      objectives::fkl_gradient_estimate(cycle_sampler(set), enc_a, map, 3, r1, ga);
  const double vb =
      objectives::fkl_gradient_estimate(cycle_sampler(set), enc_b, map, 3, r2, gb);
  CHECK(va == doctest::Approx(vb).epsilon(1e-13));
  for (size_t i = 0; i < ga.size(); ++i)
    CHECK(ga[i] == doctest::Approx(gb[i]).epsilon(1e-12).scale(1e-12));
}

TEST_CASE("ELBO is the importance-weighted bound at K = 1, bit for bit") {
  models::ClusteringModel model;
  model.mu = {-2.0, 1.0};
  model.n_obs = 30;
  Rng data_rng = make_rng(511);
  const models::ClusteringDraw d = models::clustering_sample_joint(model, data_rng);
  for (expfam::FamilyKind family : {expfam::FamilyKind::GaussianMeanOnly,
                                    expfam::FamilyKind::GaussianNatural}) {
    const int qf = expfam::param_dim(family);
    dv eta_s(qf), eta_z(2 * qf);
    if (family == expfam::FamilyKind::GaussianMeanOnly) {
      eta_s = {0.3};
      eta_z = {-1.5, 1.2};
    } else {
      eta_s = {0.3, -0.4};
      eta_z = {-1.5, -0.6, 1.2, -0.8};
    }
    Rng ra = make_rng(512), rb = make_rng(512);
    const objectives::BoundResult a =
        objectives::elbo_estimate(model, d.xs, family, eta_s, eta_z, 3, ra);
    const objectives::BoundResult b =
        objectives::iwbo_estimate(model, d.xs, family, eta_s, eta_z, 1, 3, rb);
    CHECK(a.value == b.value);
    CHECK(a.d_eta_s == b.d_eta_s);
    CHECK(a.d_eta_z == b.d_eta_z);
  }
}

TEST_CASE("bound gradients match finite differences under common draws") {
  models::ClusteringModel model;
  model.mu = {-2.0, 1.0};
  model.n_obs = 20;
  model.tau = 0.5;  // mild responsibilities keep the FD truncation error small
  Rng data_rng = make_rng(513);
  const models::ClusteringDraw d = models::clustering_sample_joint(model, data_rng);
  for (expfam::FamilyKind family : {expfam::FamilyKind::GaussianMeanOnly,
                                    expfam::FamilyKind::GaussianNatural}) {
    CAPTURE(int(family));
    const int qf = expfam::param_dim(family);
    dv eta_s(qf), eta_z(2 * qf);
    if (family == expfam::FamilyKind::GaussianMeanOnly) {
      eta_s = {0.5};
      eta_z = {-1.0, 0.8};
    } else {
      eta_s = {0.5, -0.7};
      eta_z = {-1.0, -0.5, 0.8, -0.9};
    }
    for (int k_samples : {1, 4}) {
      CAPTURE(k_samples);
      auto value_at = [&](const dv& es, const dv& ez) {
        Rng rng = make_rng(514);  // common random numbers
        return objectives::iwbo_estimate(model, d.xs, family, es, ez,
                                         k_samples, 2, rng)
            .value;
      };
      Rng rng = make_rng(514);
      const objectives::BoundResult res = objectives::iwbo_estimate(
          model, d.xs, family, eta_s, eta_z, k_samples, 2, rng);
      CHECK(res.value == doctest::Approx(value_at(eta_s, eta_z)).epsilon(1e-14));
      const double h = 1e-6;
      for (int i = 0; i < qf; ++i) {
        dv up = eta_s, dn = eta_s;
        up[i] += h;
        dn[i] -= h;
        const double fd = (value_at(up, eta_z) - value_at(dn, eta_z)) / (2.0 * h);
        CHECK(res.d_eta_s[i] == doctest::Approx(fd).epsilon(2e-4).scale(1e-3));
      }
      for (int i = 0; i < 2 * qf; ++i) {
        dv up = eta_z, dn = eta_z;
        up[i] += h;
        dn[i] -= h;
        const double fd = (value_at(eta_s, up) - value_at(eta_s, dn)) / (2.0 * h);
        CHECK(res.d_eta_z[i] == doctest::Approx(fd).epsilon(2e-4).scale(1e-3));
      }
    }
  }
}

TEST_CASE("tighter bound with more importance samples") {
  models::ClusteringModel model;
  model.mu = {-2.0, 1.0};
  model.n_obs = 20;
  Rng data_rng = make_rng(515);
  const models::ClusteringDraw d = models::clustering_sample_joint(model, data_rng);
  const dv eta_s = {0.0, -0.5};
  const dv eta_z = {0.0, -0.5, 0.0, -0.5};  // far from the posterior
  Rng r1 = make_rng(516), r2 = make_rng(517);
  const double v1 = objectives::iwbo_estimate(model, d.xs,
                                              expfam::FamilyKind::GaussianNatural,
                                              eta_s, eta_z, 1, 800, r1)
                        .value;
  const double v50 = objectives::iwbo_estimate(model, d.xs,
                                               expfam::FamilyKind::GaussianNatural,
                                               eta_s, eta_z, 50, 800, r2)
                         .value;
  CHECK(v50 > v1);
}

TEST_CASE("clustering forward-KL gradient matches finite differences") {
  models::ClusteringModel model;
  model.mu = {-1.0, 1.5};
  model.n_obs = 8;
  model.prior_s_std = 2.0;
  Rng init_rng = make_rng(518);
  objectives::ClusteringEncoders encs{
      nets::deepset_init(4, 2, 0.1, init_rng),
      nets::deepset_init(4, 4, 0.1, init_rng),
      nets::OutputMap{expfam::FamilyKind::GaussianNatural, 1e-4},
      {},
      {}};
  const size_t ns = encs.enc_s.param_count(), nz = encs.enc_z.param_count();
  dv flat_s(ns), flat_z(nz);
  nets::deepset_flatten(encs.enc_s, flat_s);
  nets::deepset_flatten(encs.enc_z, flat_z);
  // Freshly initialized biases are exactly zero, which parks some relu
  // pre-activations right on their kink; two-sided differences are invalid
  // there, so test at a nearby generic point instead.
  Rng jitter_rng = make_rng(99);
  for (double& v : flat_s) v += 0.02 + 0.06 * randu(jitter_rng);
  for (double& v : flat_z) v += 0.02 + 0.06 * randu(jitter_rng);
  nets::deepset_unflatten(encs.enc_s, flat_s);
  nets::deepset_unflatten(encs.enc_z, flat_z);

  auto value_at = [&](const dv& fs, const dv& fz) {
    objectives::ClusteringEncoders probe{encs.enc_s, encs.enc_z, encs.map, {}, {}};
    nets::deepset_unflatten(probe.enc_s, fs);
    nets::deepset_unflatten(probe.enc_z, fz);
    dv gs(ns), gz(nz);
    Rng rng = make_rng(519);  // same joint draws every call
    return objectives::clustering_fkl_gradient(model, probe, 2, rng, gs, gz);
  };

  dv gs(ns), gz(nz);
  Rng rng = make_rng(519);
  const double value = objectives::clustering_fkl_gradient(model, encs, 2, rng, gs, gz);
  CHECK(value == doctest::Approx(value_at(flat_s, flat_z)).epsilon(1e-13));
  const double h = 1e-6;
  for (size_t i = 0; i < ns; ++i) {
    dv up = flat_s, dn = flat_s;
    up[i] += h;
    dn[i] -= h;
    const double fd = (value_at(up, flat_z) - value_at(dn, flat_z)) / (2.0 * h);
    CHECK(gs[i] == doctest::Approx(fd).epsilon(1e-4).scale(1e-3));
  }
  for (size_t i = 0; i < nz; ++i) {
    dv up = flat_z, dn = flat_z;
    up[i] += h;
    dn[i] -= h;
    const double fd = (value_at(flat_s, up) - value_at(flat_s, dn)) / (2.0 * h);
    CHECK(gz[i] == doctest::Approx(fd).epsilon(1e-4).scale(1e-3));
  }
}

TEST_CASE("clustering bound-through-encoder gradient matches finite differences") {
  models::ClusteringModel model;
  model.mu = {-1.0, 1.5};
  model.n_obs = 8;
  model.tau = 0.5;
  model.prior_s_std = 2.0;
  for (expfam::FamilyKind family : {expfam::FamilyKind::GaussianMeanOnly,
                                    expfam::FamilyKind::GaussianNatural}) {
    CAPTURE(int(family));
    const int qf = expfam::param_dim(family);
    Rng init_rng = make_rng(522);
    objectives::ClusteringEncoders encs{
        nets::deepset_init(4, qf, 0.1, init_rng),
        nets::deepset_init(4, 2 * qf, 0.1, init_rng),
        nets::OutputMap{family, 1e-4},
        {},
        {}};
    const size_t ns = encs.enc_s.param_count(), nz = encs.enc_z.param_count();
    dv flat_s(ns), flat_z(nz);
    nets::deepset_flatten(encs.enc_s, flat_s);
    nets::deepset_flatten(encs.enc_z, flat_z);
    // move off the zero-bias relu kinks (see the forward-KL test above)
    Rng jitter_rng = make_rng(101);
    for (double& v : flat_s) v += 0.02 + 0.06 * randu(jitter_rng);
    for (double& v : flat_z) v += 0.02 + 0.06 * randu(jitter_rng);
    nets::deepset_unflatten(encs.enc_s, flat_s);
    nets::deepset_unflatten(encs.enc_z, flat_z);

    auto value_at = [&](const dv& fs, const dv& fz) {
      objectives::ClusteringEncoders probe{encs.enc_s, encs.enc_z, encs.map,
                                           {}, {}};
      nets::deepset_unflatten(probe.enc_s, fs);
      nets::deepset_unflatten(probe.enc_z, fz);
      dv gs(ns), gz(nz);
      Rng rng = make_rng(523);  // same dataset and importance draws every call
      return objectives::clustering_iwbo_gradient(model, probe, 3, rng, gs, gz);
    };

    dv gs(ns), gz(nz);
    Rng rng = make_rng(523);
    const double value =
        objectives::clustering_iwbo_gradient(model, encs, 3, rng, gs, gz);
    CHECK(value == doctest::Approx(value_at(flat_s, flat_z)).epsilon(1e-13));
    const double h = 1e-6;
    for (size_t i = 0; i < ns; ++i) {
      dv up = flat_s, dn = flat_s;
      up[i] += h;
      dn[i] -= h;
      const double fd = (value_at(up, flat_z) - value_at(dn, flat_z)) / (2.0 * h);
      CHECK(gs[i] == doctest::Approx(fd).epsilon(2e-4).scale(1e-3));
    }
    for (size_t i = 0; i < nz; ++i) {
      dv up = flat_z, dn = flat_z;
      up[i] += h;
      dn[i] -= h;
      const double fd = (value_at(flat_s, up) - value_at(flat_s, dn)) / (2.0 * h);
      CHECK(gz[i] == doctest::Approx(fd).epsilon(2e-4).scale(1e-3));
    }
    dv short_gs(1);
    Rng r2 = make_rng(524);
    CHECK_THROWS_AS(
        objectives::clustering_iwbo_gradient(model, encs, 3, r2, short_gs, gz),
        std::invalid_argument);
  }
}

TEST_CASE("estimator rejects non-scalar latents") {
  objectives::JointSampler bad = [](Rng&) {
    objectives::JointSample s;
    s.latent = {0.1, 0.2};
    s.obs = {1.0, 0.0};
    return s;
  };
  nets::TwoLayerNet net = audit_net(4, 520);
  objectives::EncoderRef enc = objectives::encoder_ref(net);
  const nets::OutputMap map{expfam::FamilyKind::VonMisesNatural, 1e-4};
  dv grad(net.param_count());
  Rng rng = make_rng(521);
  CHECK_THROWS_AS(objectives::fkl_gradient_estimate(bad, enc, map, 2, rng, grad),
                  std::invalid_argument);
}

TEST_CASE("train loop: recording schedule, snapshots, convergence") {
  dv params = {5.0, -3.0, 2.0};
  const dv target = {1.0, 2.0, -0.5};
  objectives::TrainProblem prob;
  prob.param_blocks = {std::span<double>(params)};
  prob.estimate = [&](Rng&, const std::vector<std::span<double>>& grads) {
    double obj = 0.0;
    for (int i = 0; i < 3; ++i) {
      grads[0][i] = params[i] - target[i];
      obj += 0.5 * (params[i] - target[i]) * (params[i] - target[i]);
    }
    return obj;
  };
  objectives::AdamConfig cfg;
  cfg.base_lr = 0.05;
  cfg.total_steps = 0;
  Rng rng = make_rng(522);
  const objectives::TrainTrace trace =
      objectives::train(prob, cfg, objectives::Optimizer::Adam, 500, 100, true,
                        rng, [&](long, objectives::TraceRow& row) {
                          row.extra.emplace_back("probe", 1.0);
                        });
  REQUIRE(trace.rows.size() == 6);  // steps 0..400 by 100, plus final at 500
  CHECK(trace.rows.front().step == 0);
  CHECK(trace.rows.back().step == 500);
  CHECK(trace.snapshots.size() == trace.rows.size());
  for (size_t i = 0; i < trace.rows.size(); ++i) {
    CHECK(trace.rows[i].snapshot == int(i));
    REQUIRE(trace.rows[i].extra.size() == 1);
    CHECK(trace.rows[i].extra[0].first == "probe");
  }
  CHECK(!trace.aborted);
  for (int i = 0; i < 3; ++i)
    CHECK(params[i] == doctest::Approx(target[i]).epsilon(1e-3).scale(1e-3));
  // deterministic quadratic: recorded objective decreases
  for (size_t i = 1; i < trace.rows.size(); ++i)
    CHECK(trace.rows[i].objective < trace.rows[i - 1].objective);
  // final snapshot equals the final parameters
  const dv& last = trace.snapshots.back();
  for (int i = 0; i < 3; ++i) CHECK(last[i] == params[i]);
}

TEST_CASE("train loop: two parameter blocks step together") {
  dv xa = {4.0}, xb = {-2.0, 1.0};
  objectives::TrainProblem prob;
  prob.param_blocks = {std::span<double>(xa), std::span<double>(xb)};
  prob.estimate = [&](Rng&, const std::vector<std::span<double>>& grads) {
    grads[0][0] = xa[0] - 1.0;
    grads[1][0] = xb[0] + 1.0;
    grads[1][1] = xb[1] - 2.0;
    return 0.5 * (grads[0][0] * grads[0][0] + grads[1][0] * grads[1][0] +
                  grads[1][1] * grads[1][1]);
  };
  objectives::AdamConfig cfg;
  cfg.base_lr = 0.05;
  Rng rng = make_rng(523);
  objectives::train(prob, cfg, objectives::Optimizer::Adam, 600, 600, false, rng);
  CHECK(xa[0] == doctest::Approx(1.0).epsilon(1e-3).scale(1e-3));
  CHECK(xb[0] == doctest::Approx(-1.0).epsilon(1e-3).scale(1e-3));
  CHECK(xb[1] == doctest::Approx(2.0).epsilon(1e-3).scale(1e-3));
}

TEST_CASE("train loop aborts on a non-finite objective, keeping last state") {
  dv params = {1.0};
  long calls = 0;
  objectives::TrainProblem prob;
  prob.param_blocks = {std::span<double>(params)};
  prob.estimate = [&](Rng&, const std::vector<std::span<double>>& grads) {
    ++calls;
    grads[0][0] = 0.1;
    return calls > 7 ? std::nan("") : 1.0;
  };
  objectives::AdamConfig cfg;
  cfg.base_lr = 0.01;
  Rng rng = make_rng(524);
  const objectives::TrainTrace trace = objectives::train(
      prob, cfg, objectives::Optimizer::Sgd, 100, 10, false, rng);
  CHECK(trace.aborted);
  CHECK(trace.abort_step == 7);
  CHECK(trace.rows.back().step == 7);
  CHECK_UNARY(std::isnan(trace.rows.back().objective));
  // 7 completed SGD steps, each -0.01 * 0.1
  CHECK(params[0] == doctest::Approx(1.0 - 7 * 0.001).epsilon(1e-12));
}
