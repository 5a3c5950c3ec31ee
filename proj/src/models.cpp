#include "npeflow/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace npeflow::models {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

double log_sum_exp(std::span<const double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

double log_normal_pdf(double x, double mean, double std) {
  const double z = (x - mean) / std;
  return -0.5 * kLogTwoPi - std::log(std) - 0.5 * z * z;
}

}  // namespace

ToyDraw toy_sample_joint(const ToyRotationModel& model, Rng& rng) {
  ToyDraw d;
  d.theta = randu(rng) * kTwoPi;
  const double a = d.theta + model.sigma * randn(rng);
  d.x = {std::cos(a), std::sin(a)};
  return d;
}

double toy_log_likelihood(const ToyRotationModel& model, double theta,
                          std::array<double, 2> x) {
  const double norm = std::hypot(x[0], x[1]);
  if (std::fabs(norm - 1.0) > 1e-9)
    throw std::domain_error("toy model: observation must lie on the unit circle");
  const double alpha = std::atan2(x[1], x[0]);
  // Wrapped normal: sum_k N(alpha - theta + 2 pi k; 0, sigma^2).
  double delta = std::remainder(alpha - theta, kTwoPi);  // in [-pi, pi]
  const int kmax = model.wrap_terms;
  std::vector<double> terms;
  terms.reserve(2 * kmax + 1);
  for (int k = -kmax; k <= kmax; ++k) {
    const double u = (delta + kTwoPi * k) / model.sigma;
    terms.push_back(-0.5 * u * u);
  }
  return -0.5 * kLogTwoPi - std::log(model.sigma) + log_sum_exp(terms);
}

ToyPosterior toy_posterior_oracle(const ToyRotationModel& model,
                                  std::array<double, 2> x) {
  const int n = model.grid_size;
  ToyPosterior post;
  post.grid.resize(n);
  post.log_post.resize(n);
  for (int i = 0; i < n; ++i) {
    post.grid[i] = kTwoPi * i / n;
    post.log_post[i] = toy_log_likelihood(model, post.grid[i], x);
  }
  // Periodic trapezoid = uniform weights 2pi/n.
  post.log_normalizer = log_sum_exp(post.log_post) + std::log(kTwoPi / n);
  double mc = 0.0, ms = 0.0;
  for (int i = 0; i < n; ++i) {
    post.log_post[i] -= post.log_normalizer;
    const double w = std::exp(post.log_post[i]) * (kTwoPi / n);
    mc += w * std::cos(post.grid[i]);
    ms += w * std::sin(post.grid[i]);
  }
  post.moments = {mc, ms};
  return post;
}

double toy_log_posterior(const ToyRotationModel& model, double theta,
                         std::array<double, 2> x) {
  return toy_log_likelihood(model, theta, x) -
         toy_posterior_oracle(model, x).log_normalizer;
}

void validate_model(const ClusteringModel& model) {
  if (model.mu.empty())
    throw std::invalid_argument("clustering model: component list is empty");
  if (!(model.sigma > 0.0) || !(model.tau > 0.0) || !(model.prior_s_std > 0.0))
    throw std::invalid_argument("clustering model: scales must be positive");
  if (model.n_obs <= 0)
    throw std::invalid_argument("clustering model: n_obs must be positive");
  if (!model.weights.empty()) {
    if (model.weights.size() != model.mu.size())
      throw std::invalid_argument(
          "clustering model: weights length does not match components");
    double sum = 0.0;
    for (double w : model.weights) {
      if (!(w > 0.0))
        throw std::invalid_argument("clustering model: weights must be positive");
      sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("clustering model: weights must sum to 1");
  }
}

namespace {

std::vector<double> effective_weights(const ClusteringModel& model) {
  if (!model.weights.empty()) return model.weights;
  return std::vector<double>(model.mu.size(), 1.0 / model.mu.size());
}

ClusteringDraw sample_given_s(const ClusteringModel& model, double s, Rng& rng) {
  const int d = model.dim();
  const std::vector<double> w = effective_weights(model);
  ClusteringDraw draw;
  draw.s = s;
  draw.z.resize(d);
  for (int j = 0; j < d; ++j)
    draw.z[j] = model.mu[j] + s + model.sigma * randn(rng);
  draw.xs.resize(model.n_obs);
  for (int i = 0; i < model.n_obs; ++i) {
    const double u = randu(rng);
    double acc = 0.0;
    int j = d - 1;
    for (int k = 0; k < d; ++k) {
      acc += w[k];
      if (u < acc) { j = k; break; }
    }
    draw.xs[i] = draw.z[j] + model.tau * randn(rng);
  }
  return draw;
}

}  // namespace

ClusteringDraw clustering_sample_joint(const ClusteringModel& model, Rng& rng) {
  validate_model(model);
  const double s = model.prior_s_std * randn(rng);
  return sample_given_s(model, s, rng);
}

ClusteringDraw clustering_sample_joint_fixed_s(const ClusteringModel& model,
                                               double s, Rng& rng) {
  validate_model(model);
  return sample_given_s(model, s, rng);
}

double clustering_log_joint(const ClusteringModel& model, double s,
                            std::span<const double> z,
                            std::span<const double> xs) {
  validate_model(model);
  const int d = model.dim();
  if (static_cast<int>(z.size()) != d)
    throw std::invalid_argument("clustering log joint: z has wrong length");
  const std::vector<double> w = effective_weights(model);
  double lp = log_normal_pdf(s, 0.0, model.prior_s_std);
  for (int j = 0; j < d; ++j)
    lp += log_normal_pdf(z[j], model.mu[j] + s, model.sigma);
  std::vector<double> comp(d);
  for (double x : xs) {
    for (int j = 0; j < d; ++j)
      comp[j] = std::log(w[j]) + log_normal_pdf(x, z[j], model.tau);
    lp += log_sum_exp(comp);
  }
  return lp;
}

void clustering_log_joint_grad(const ClusteringModel& model, double s,
                               std::span<const double> z,
                               std::span<const double> xs, double& ds,
                               std::span<double> dz) {
  validate_model(model);
  const int d = model.dim();
  if (static_cast<int>(z.size()) != d || static_cast<int>(dz.size()) != d)
    throw std::invalid_argument("clustering grad: z has wrong length");
  const std::vector<double> w = effective_weights(model);
  const double inv_sig2 = 1.0 / (model.sigma * model.sigma);
  const double inv_tau2 = 1.0 / (model.tau * model.tau);
  ds = -s / (model.prior_s_std * model.prior_s_std);
  for (int j = 0; j < d; ++j) {
    const double r = (z[j] - model.mu[j] - s) * inv_sig2;
    dz[j] = -r;
    ds += r;
  }
  std::vector<double> comp(d);
  for (double x : xs) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < d; ++j) {
      comp[j] = std::log(w[j]) + log_normal_pdf(x, z[j], model.tau);
      mx = std::max(mx, comp[j]);
    }
    double norm = 0.0;
    for (int j = 0; j < d; ++j) norm += std::exp(comp[j] - mx);
    for (int j = 0; j < d; ++j) {
      const double resp = std::exp(comp[j] - mx) / norm;
      dz[j] += resp * (x - z[j]) * inv_tau2;
    }
  }
}

void save_dataset_csv(const ClusteringModel& model, const ClusteringDraw& draw,
                      const std::string& path, std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "x\n";
  char buf[64];
  for (double x : draw.xs) {
    std::snprintf(buf, sizeof buf, "%.17g\n", x);
    out << buf;
  }
  nlohmann::json meta;
  meta["model"] = {{"mu", model.mu},
                   {"weights", effective_weights(model)},
                   {"sigma", model.sigma},
                   {"tau", model.tau},
                   {"prior_s_std", model.prior_s_std},
                   {"n_obs", model.n_obs}};
  meta["s"] = draw.s;
  meta["z"] = draw.z;
  meta["seed"] = seed;
  std::ofstream mout(path + ".meta.json");
  if (!mout) throw std::runtime_error("cannot open " + path + ".meta.json");
  mout << meta.dump(2) << "\n";
}

ClusteringDraw load_dataset_csv(const std::string& path,
                                ClusteringModel* model_out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "x")
    throw std::runtime_error(path + ": expected header 'x'");
  ClusteringDraw draw;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    draw.xs.push_back(std::stod(line));
  }
  std::ifstream min(path + ".meta.json");
  if (!min) throw std::runtime_error("cannot open " + path + ".meta.json");
  nlohmann::json meta = nlohmann::json::parse(min);
  draw.s = meta.at("s").get<double>();
  draw.z = meta.at("z").get<std::vector<double>>();
  if (model_out) {
    const auto& m = meta.at("model");
    model_out->mu = m.at("mu").get<std::vector<double>>();
    model_out->weights = m.at("weights").get<std::vector<double>>();
    model_out->sigma = m.at("sigma").get<double>();
    model_out->tau = m.at("tau").get<double>();
    model_out->prior_s_std = m.at("prior_s_std").get<double>();
    model_out->n_obs = m.at("n_obs").get<int>();
  }
  return draw;
}

}  // namespace npeflow::models
