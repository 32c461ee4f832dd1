#pragma once

#include <span>
#include <vector>

#include "fedbayes/expfam.hpp"

namespace fedbayes {

/// One labelled observation. For the income task features are standardised
/// and carry a trailing bias coordinate fixed at 1; labels are -1 or +1.
struct Example {
  std::vector<double> features;
  int label = 1;
};

/// Unconstrained optimisation view of a diagonal Gaussian: stdev = exp(rho).
struct VariationalParams {
  std::vector<double> mu;
  std::vector<double> rho;

  std::size_t dim() const { return mu.size(); }

  static VariationalParams from_moment(const GaussianMoment& m);
  GaussianMoment to_moment() const;
};

// Numerically stable logistic helpers.
double sigmoid(double z);
double log_sigmoid(double z);

/// log P(t | x, w) = log sigmoid(t * w.x).
double log_likelihood(std::span<const double> w, const Example& e);

/// Per-example log-likelihood model seen by the local optimisers. The
/// federated machinery only needs the gradient of log p(example | w) at a
/// sampled weight vector, so other observation models (used by the oracle
/// tests) plug in here.
class Likelihood {
 public:
  virtual ~Likelihood() = default;
  virtual double log_density(std::span<const double> w, const Example& e) const = 0;
  // out += d log p(e | w) / dw
  virtual void add_grad_w(std::span<const double> w, const Example& e,
                          std::span<double> out) const = 0;
};

class LogisticLikelihood final : public Likelihood {
 public:
  double log_density(std::span<const double> w, const Example& e) const override;
  void add_grad_w(std::span<const double> w, const Example& e,
                  std::span<double> out) const override;
};

/// Reparameterised gradient of log p(t | x, w) at w = mu + exp(rho) * noise,
/// with respect to (mu, rho); layout [d mu | d rho], length 2d. The caller
/// owns the randomness.
std::vector<double> per_example_grad(const VariationalParams& vp, const Example& e,
                                     std::span<const double> noise);

/// Same reparameterised chain rule for an arbitrary observation model;
/// accumulates into grad (length 2d).
void add_reparam_grad(const Likelihood& lik, const VariationalParams& vp, const Example& e,
                      std::span<const double> noise, std::span<double> grad);

/// Analytic gradient of KL(q || cavity) with respect to (mu, rho).
std::vector<double> kl_grad(const VariationalParams& vp, const GaussianNatural& cavity);

/// Probit-approximate predictive probability of label +1.
double predict(const GaussianMoment& q, std::span<const double> x);

struct Metrics {
  double accuracy = 0.0;
  double avg_log_lik = 0.0;
};

/// Accuracy of the p > 0.5 rule and mean predictive log likelihood of the
/// true labels.
Metrics evaluate(const GaussianMoment& q, std::span<const Example> test);

}  // namespace fedbayes
