#include "fedbayes/expfam.hpp"

#include <cmath>
#include <string>

#include "fedbayes/errors.hpp"

namespace fedbayes {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* where) {
  if (a != b) {
    throw dimension_mismatch_error(std::string(where) + ": dimensions " + std::to_string(a) +
                                   " and " + std::to_string(b) + " differ");
  }
}

}  // namespace

GaussianNatural::GaussianNatural(std::vector<double> e1, std::vector<double> e2)
    : eta1(std::move(e1)), eta2(std::move(e2)) {
  require_same_dim(eta1.size(), eta2.size(), "GaussianNatural");
  if (eta1.empty()) throw dimension_mismatch_error("GaussianNatural: dimension must be >= 1");
}

bool GaussianNatural::normalizable() const {
  for (double e : eta2) {
    if (!(e < 0.0)) return false;
  }
  return true;
}

GaussianMoment::GaussianMoment(std::vector<double> m, std::vector<double> v)
    : mean(std::move(m)), variance(std::move(v)) {
  require_same_dim(mean.size(), variance.size(), "GaussianMoment");
  if (mean.empty()) throw dimension_mismatch_error("GaussianMoment: dimension must be >= 1");
  for (double var : variance) {
    if (!(var > 0.0)) {
      throw invalid_moment_error("GaussianMoment: variance must be strictly positive");
    }
  }
}

GaussianNatural to_natural(const GaussianMoment& m) {
  const std::size_t d = m.dim();
  std::vector<double> eta1(d), eta2(d);
  for (std::size_t i = 0; i < d; ++i) {
    eta2[i] = -0.5 / m.variance[i];
    eta1[i] = m.mean[i] / m.variance[i];
  }
  return GaussianNatural(std::move(eta1), std::move(eta2));
}

GaussianMoment to_moment(const GaussianNatural& n) {
  const std::size_t d = n.dim();
  std::vector<double> mean(d), variance(d);
  for (std::size_t i = 0; i < d; ++i) {
    if (!(n.eta2[i] < 0.0)) {
      throw non_normalizable_error("to_moment: eta2 >= 0 in coordinate " + std::to_string(i));
    }
    variance[i] = -0.5 / n.eta2[i];
    mean[i] = n.eta1[i] * variance[i];
  }
  return GaussianMoment(std::move(mean), std::move(variance));
}

GaussianNatural multiply(const GaussianNatural& a, const GaussianNatural& b) {
  require_same_dim(a.dim(), b.dim(), "multiply");
  GaussianNatural out = a;
  for (std::size_t i = 0; i < out.dim(); ++i) {
    out.eta1[i] += b.eta1[i];
    out.eta2[i] += b.eta2[i];
  }
  return out;
}

GaussianNatural divide(const GaussianNatural& a, const GaussianNatural& b) {
  require_same_dim(a.dim(), b.dim(), "divide");
  GaussianNatural out = a;
  for (std::size_t i = 0; i < out.dim(); ++i) {
    out.eta1[i] -= b.eta1[i];
    out.eta2[i] -= b.eta2[i];
  }
  return out;
}

double kl_divergence(const GaussianMoment& q, const GaussianMoment& p) {
  require_same_dim(q.dim(), p.dim(), "kl_divergence");
  double kl = 0.0;
  for (std::size_t i = 0; i < q.dim(); ++i) {
    const double dm = q.mean[i] - p.mean[i];
    kl += 0.5 * std::log(p.variance[i] / q.variance[i]) +
          (q.variance[i] + dm * dm) / (2.0 * p.variance[i]) - 0.5;
  }
  return kl;
}

}  // namespace fedbayes
