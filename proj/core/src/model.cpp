#include "fedbayes/model.hpp"

#include <cmath>
#include <stdexcept>

#include "fedbayes/errors.hpp"

namespace fedbayes {

VariationalParams VariationalParams::from_moment(const GaussianMoment& m) {
  VariationalParams vp;
  vp.mu = m.mean;
  vp.rho.resize(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i) {
    vp.rho[i] = 0.5 * std::log(m.variance[i]);
  }
  return vp;
}

GaussianMoment VariationalParams::to_moment() const {
  std::vector<double> variance(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    variance[i] = std::exp(2.0 * rho[i]);
  }
  return GaussianMoment(mu, std::move(variance));
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double ez = std::exp(z);
  return ez / (1.0 + ez);
}

double log_sigmoid(double z) {
  // -log(1 + exp(-z)) with the large-negative branch z - log(1 + exp(z)).
  if (z >= 0.0) {
    return -std::log1p(std::exp(-z));
  }
  return z - std::log1p(std::exp(z));
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double log_likelihood(std::span<const double> w, const Example& e) {
  if (w.size() != e.features.size()) {
    throw dimension_mismatch_error("log_likelihood: weight/feature dimensions differ");
  }
  return log_sigmoid(static_cast<double>(e.label) * dot(w, e.features));
}

double LogisticLikelihood::log_density(std::span<const double> w, const Example& e) const {
  return log_likelihood(w, e);
}

void LogisticLikelihood::add_grad_w(std::span<const double> w, const Example& e,
                                    std::span<double> out) const {
  const double t = static_cast<double>(e.label);
  const double margin = t * dot(w, e.features);
  const double coeff = (1.0 - sigmoid(margin)) * t;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += coeff * e.features[i];
  }
}

void add_reparam_grad(const Likelihood& lik, const VariationalParams& vp, const Example& e,
                      std::span<const double> noise, std::span<double> grad) {
  const std::size_t d = vp.dim();
  std::vector<double> stdev(d), w(d), g_w(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    stdev[i] = std::exp(vp.rho[i]);
    w[i] = vp.mu[i] + stdev[i] * noise[i];
  }
  lik.add_grad_w(w, e, g_w);
  for (std::size_t i = 0; i < d; ++i) {
    grad[i] += g_w[i];
    grad[d + i] += g_w[i] * noise[i] * stdev[i];
  }
}

std::vector<double> per_example_grad(const VariationalParams& vp, const Example& e,
                                     std::span<const double> noise) {
  std::vector<double> grad(2 * vp.dim(), 0.0);
  LogisticLikelihood logistic;
  add_reparam_grad(logistic, vp, e, noise, grad);
  return grad;
}

std::vector<double> kl_grad(const VariationalParams& vp, const GaussianNatural& cavity) {
  if (vp.dim() != cavity.dim()) {
    throw dimension_mismatch_error("kl_grad: parameter/cavity dimensions differ");
  }
  if (!cavity.normalizable()) {
    throw cavity_collapse_error("kl_grad: cavity is not normalizable");
  }
  const GaussianMoment c = to_moment(cavity);
  const std::size_t d = vp.dim();
  std::vector<double> grad(2 * d);
  for (std::size_t i = 0; i < d; ++i) {
    const double var_q = std::exp(2.0 * vp.rho[i]);
    grad[i] = (vp.mu[i] - c.mean[i]) / c.variance[i];
    grad[d + i] = var_q / c.variance[i] - 1.0;
  }
  return grad;
}

double predict(const GaussianMoment& q, std::span<const double> x) {
  if (q.dim() != x.size()) {
    throw dimension_mismatch_error("predict: posterior/feature dimensions differ");
  }
  double mean_act = 0.0;
  double var_act = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mean_act += q.mean[i] * x[i];
    var_act += q.variance[i] * x[i] * x[i];
  }
  return sigmoid(mean_act / std::sqrt(1.0 + M_PI * var_act / 8.0));
}

Metrics evaluate(const GaussianMoment& q, std::span<const Example> test) {
  if (test.empty()) {
    throw std::invalid_argument("evaluate: test set is empty");
  }
  std::size_t correct = 0;
  double log_lik = 0.0;
  for (const Example& e : test) {
    double mean_act = 0.0;
    double var_act = 0.0;
    for (std::size_t i = 0; i < e.features.size(); ++i) {
      mean_act += q.mean[i] * e.features[i];
      var_act += q.variance[i] * e.features[i] * e.features[i];
    }
    const double z = mean_act / std::sqrt(1.0 + M_PI * var_act / 8.0);
    const int predicted = sigmoid(z) > 0.5 ? 1 : -1;
    if (predicted == e.label) ++correct;
    log_lik += log_sigmoid(static_cast<double>(e.label) * z);
  }
  Metrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  m.avg_log_lik = log_lik / static_cast<double>(test.size());
  return m;
}

}  // namespace fedbayes
