#include "fedbayes/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fedbayes/errors.hpp"

namespace fedbayes {

namespace {

double logsumexp2(double a, double b) {
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  return hi + std::log1p(std::exp(lo - hi));
}

double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// log A(alpha) for integer alpha >= 2: log-moment of the privacy loss of the
/// subsampled Gaussian,
///   A = sum_{j=0}^{alpha} C(alpha,j) q^j (1-q)^(alpha-j) exp(j(j-1)/(2 sigma^2)).
double log_moment_int(int alpha, double q, double sigma) {
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  double acc = -std::numeric_limits<double>::infinity();
  for (int j = 0; j <= alpha; ++j) {
    const double term = log_binomial(alpha, j) + j * log_q + (alpha - j) * log_1mq +
                        (j * (j - 1.0)) / (2.0 * sigma * sigma);
    acc = logsumexp2(acc, term);
  }
  return acc;
}

}  // namespace

MomentsLedger::MomentsLedger() : rdp_(order_grid().size(), 0.0) {}

const std::vector<double>& MomentsLedger::order_grid() {
  static const std::vector<double> grid = [] {
    std::vector<double> g;
    g.push_back(1.5);
    for (int a = 2; a <= 64; ++a) g.push_back(static_cast<double>(a));
    g.push_back(128.0);
    g.push_back(256.0);
    return g;
  }();
  return grid;
}

void MomentsLedger::accumulate(std::span<const double> per_order_rdp) {
  if (per_order_rdp.size() != rdp_.size())
    throw dimension_mismatch_error("per-order rdp length does not match the order grid");
  for (std::size_t i = 0; i < rdp_.size(); ++i) rdp_[i] += per_order_rdp[i];
  ++steps_;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> clip(std::span<const double> g, double clip_c) {
  if (clip_c <= 0.0) throw std::invalid_argument("clip bound must be positive");
  std::vector<double> out(g.begin(), g.end());
  const double scale = std::max(1.0, l2_norm(g) / clip_c);
  if (scale > 1.0)
    for (double& x : out) x /= scale;
  return out;
}

std::vector<double> noisy_average(const std::vector<std::vector<double>>& clipped, double clip_c,
                                  double noise_scale, double lot_size,
                                  std::span<const double> gauss) {
  if (clip_c <= 0.0) throw std::invalid_argument("clip bound must be positive");
  if (noise_scale < 0.0) throw std::invalid_argument("noise scale must be nonnegative");
  if (lot_size <= 0.0) throw std::invalid_argument("lot size must be positive");
  const std::size_t dim = gauss.size();
  // Tolerance absorbs the rounding in upstream norm computations; anything
  // materially above the bound means the caller skipped clipping.
  const double bound = clip_c * (1.0 + 1e-9);
  std::vector<double> sum(dim, 0.0);
  for (const auto& g : clipped) {
    if (g.size() != dim) throw dimension_mismatch_error("gradient dimension mismatch in lot");
    if (l2_norm(g) > bound)
      throw contract_violation_error("noisy_average received a gradient above the clip bound");
    for (std::size_t i = 0; i < dim; ++i) sum[i] += g[i];
  }
  // Guarded so noise_scale = 0 with an infinite clip bound stays exact
  // instead of producing 0 * inf.
  const double noise_std = noise_scale > 0.0 ? noise_scale * clip_c : 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    if (noise_std > 0.0) sum[i] += noise_std * gauss[i];
    sum[i] /= lot_size;
  }
  return sum;
}

double rdp_subsampled_gaussian(double q, double sigma, double alpha) {
  if (alpha <= 1.0) throw std::domain_error("rdp order must exceed 1");
  if (q <= 0.0 || q > 1.0) throw std::domain_error("sample rate must be in (0, 1]");
  if (sigma <= 0.0) throw std::domain_error("noise scale must be positive");

  if (q == 1.0) return alpha / (2.0 * sigma * sigma);

  const double floor_a = std::floor(alpha);
  if (alpha == floor_a) {
    const int a = static_cast<int>(floor_a);
    return std::max(0.0, log_moment_int(a, q, sigma) / (alpha - 1.0));
  }

  // Bracket by integers: log A is convex in the order, and log A(1) = 0, so
  // chord interpolation of the log-moments upper-bounds the true value.
  const int lo = static_cast<int>(floor_a);
  const int hi = lo + 1;
  const double log_a_lo = lo == 1 ? 0.0 : log_moment_int(lo, q, sigma);
  const double log_a_hi = log_moment_int(hi, q, sigma);
  const double log_a =
      ((hi - alpha) * log_a_lo + (alpha - lo) * log_a_hi) / static_cast<double>(hi - lo);
  return std::max(0.0, log_a / (alpha - 1.0));
}

std::vector<double> step_rdp(double q, double sigma) {
  const auto& grid = MomentsLedger::order_grid();
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = rdp_subsampled_gaussian(q, sigma, grid[i]);
  return out;
}

void accumulate_step(MomentsLedger& ledger, double q, double sigma) {
  ledger.accumulate(step_rdp(q, sigma));
}

double epsilon(const MomentsLedger& ledger, double delta) {
  if (delta <= 0.0 || delta >= 1.0) throw std::domain_error("delta must be in (0, 1)");
  const auto& grid = MomentsLedger::order_grid();
  const auto& rdp = ledger.rdp();
  const double log_inv_delta = std::log(1.0 / delta);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i)
    best = std::min(best, rdp[i] + log_inv_delta / (grid[i] - 1.0));
  return best;
}

double delta_for_client(std::size_t n_m) {
  if (n_m == 0) throw std::invalid_argument("client must hold at least one example");
  // Smallest k with 10^k >= n_m, tracked in integers so large counts cannot
  // pick up floating-point rounding.
  std::size_t pow10 = 1;
  int k = 0;
  while (pow10 < n_m) {
    pow10 *= 10;
    ++k;
  }
  double d = 1.0;
  for (int i = 0; i < k; ++i) d /= 10.0;
  return d;
}

bool budget_exhausted(const MomentsLedger& ledger, const PrivacyParams& params,
                      std::span<const double> cached_step_rdp) {
  const auto& grid = MomentsLedger::order_grid();
  if (cached_step_rdp.size() != grid.size())
    throw dimension_mismatch_error("per-order rdp length does not match the order grid");
  const auto& rdp = ledger.rdp();
  const double log_inv_delta = std::log(1.0 / params.delta);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i)
    best = std::min(best, rdp[i] + cached_step_rdp[i] + log_inv_delta / (grid[i] - 1.0));
  return best > params.epsilon_max;
}

bool budget_exhausted(const MomentsLedger& ledger, const PrivacyParams& params) {
  return budget_exhausted(ledger, params,
                          step_rdp(params.sample_rate, params.noise_scale));
}

}  // namespace fedbayes
