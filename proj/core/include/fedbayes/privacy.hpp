#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fedbayes {

/// Knobs of the client-side Gaussian mechanism and its budget. noise stdev on
/// the clipped-gradient sum is noise_scale * clip_c. noise_scale == 0 is the
/// mechanism-disabled diagnostic mode: no noise, no accounting; real runs
/// require noise_scale > 0.
struct PrivacyParams {
  double clip_c = 0.0;
  double noise_scale = 0.0;
  double sample_rate = 1.0;
  double delta = 0.0;
  double epsilon_max = 0.0;
};

/// Cumulative Renyi-DP over a fixed grid of orders; composition is addition.
class MomentsLedger {
 public:
  MomentsLedger();

  /// {1.5, 2, 3, ..., 64, 128, 256}; wide enough that the epsilon minimiser
  /// is interior for the hyperparameter ranges used here.
  static const std::vector<double>& order_grid();

  const std::vector<double>& rdp() const { return rdp_; }
  std::size_t steps() const { return steps_; }

  void accumulate(std::span<const double> per_order_rdp);

 private:
  std::vector<double> rdp_;
  std::size_t steps_ = 0;
};

/// g / max(1, |g|_2 / clip_c); never increases the norm, preserves direction.
std::vector<double> clip(std::span<const double> g, double clip_c);

double l2_norm(std::span<const double> v);

/// (sum of clipped + noise_scale * clip_c * gauss) / lot_size. Every input
/// must already satisfy the clipping bound; gauss is a standard-normal vector
/// supplied by the caller and fixes the output dimension.
std::vector<double> noisy_average(const std::vector<std::vector<double>>& clipped, double clip_c,
                                  double noise_scale, double lot_size,
                                  std::span<const double> gauss);

/// Renyi-DP of one Poisson-subsampled Gaussian mechanism invocation at order
/// alpha. Integer orders use the binomial expansion of the log-moment;
/// non-integer orders are upper-bounded by interpolating log-moments of the
/// bracketing integers (log-convexity). At q = 1 this is alpha / (2 sigma^2).
double rdp_subsampled_gaussian(double q, double sigma, double alpha);

/// Per-order RDP of one step, over the ledger grid. Worth computing once when
/// (q, sigma) are fixed across steps.
std::vector<double> step_rdp(double q, double sigma);

void accumulate_step(MomentsLedger& ledger, double q, double sigma);

/// epsilon(delta) = min over orders of rdp[alpha] + log(1/delta)/(alpha - 1).
double epsilon(const MomentsLedger& ledger, double delta);

/// Largest power of ten <= 1/n_m.
double delta_for_client(std::size_t n_m);

/// True iff one further accounted step would push epsilon past the budget, so
/// the reported spend never exceeds epsilon_max.
bool budget_exhausted(const MomentsLedger& ledger, const PrivacyParams& params);
bool budget_exhausted(const MomentsLedger& ledger, const PrivacyParams& params,
                      std::span<const double> cached_step_rdp);

}  // namespace fedbayes
