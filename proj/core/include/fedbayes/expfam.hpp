#pragma once

#include <cstddef>
#include <vector>

namespace fedbayes {

/// Natural parameters of a diagonal Gaussian: eta1 = precision-weighted mean,
/// eta2 = -precision/2 per dimension. Factor-valued instances (differences of
/// distributions) may have eta2 >= 0 in some coordinates and are legal; only
/// conversion to moments requires eta2 < 0 everywhere.
struct GaussianNatural {
  std::vector<double> eta1;
  std::vector<double> eta2;

  GaussianNatural() = default;
  GaussianNatural(std::vector<double> e1, std::vector<double> e2);

  std::size_t dim() const { return eta1.size(); }

  /// Multiplicative identity: the factor contributing nothing.
  static GaussianNatural zero(std::size_t d) {
    return GaussianNatural(std::vector<double>(d, 0.0), std::vector<double>(d, 0.0));
  }

  bool normalizable() const;
};

/// Mean/variance parameters of a diagonal Gaussian; variance > 0 elementwise.
struct GaussianMoment {
  std::vector<double> mean;
  std::vector<double> variance;

  GaussianMoment() = default;
  GaussianMoment(std::vector<double> m, std::vector<double> v);

  std::size_t dim() const { return mean.size(); }
};

GaussianNatural to_natural(const GaussianMoment& m);
GaussianMoment to_moment(const GaussianNatural& n);

/// Product of exponential-family factors: natural parameters add.
GaussianNatural multiply(const GaussianNatural& a, const GaussianNatural& b);

/// Quotient of factors: natural parameters subtract. The result may be
/// non-normalizable, which is legal for factors.
GaussianNatural divide(const GaussianNatural& a, const GaussianNatural& b);

/// KL(q || p) in nats, closed form for diagonal Gaussians.
double kl_divergence(const GaussianMoment& q, const GaussianMoment& p);

}  // namespace fedbayes
