#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedbayes/expfam.hpp"
#include "fedbayes/model.hpp"
#include "fedbayes/privacy.hpp"
#include "fedbayes/rng.hpp"

namespace fedbayes {

/// One client's approximate-likelihood factor plus its privacy state. A zero
/// factor means the client has never contributed.
struct FactorState {
  GaussianNatural t_m;
  MomentsLedger ledger;
  bool exhausted = false;
};

/// Global posterior bookkeeping: q stays equal to prior + sum of factors (in
/// natural parameters) under server_apply.
struct ServerState {
  GaussianNatural prior;
  GaussianNatural q;
  std::vector<FactorState> factors;
};

ServerState make_server(const GaussianNatural& prior, std::size_t m_clients);

enum class MinibatchKind { fixed, poisson };

/// fixed draws `fixed_size` distinct indices per step; poisson includes each
/// index independently with probability `poisson_rate` (rate 1 short-circuits
/// to the full shard without consuming randomness, so it can mirror an exact
/// full-batch run stream-for-stream).
struct MinibatchSpec {
  MinibatchKind kind = MinibatchKind::fixed;
  std::size_t fixed_size = 100;
  double poisson_rate = 1.0;
};

struct LocalOptConfig {
  std::size_t n_steps = 25;
  double learning_rate = 2.0;
  double damping = 0.1;
  MinibatchSpec minibatch;
  std::size_t mc_samples = 1;
  double adagrad_epsilon = 1e-8;
};

/// Selected shard indices written into out; scratch persists across calls
/// (fixed-size sampling permutes a prefix of it).
void sample_minibatch(const MinibatchSpec& spec, std::size_t n, Generator& rng,
                      std::vector<std::size_t>& scratch, std::vector<std::size_t>& out);

/// q_old with client m's factor removed. Throws cavity_collapse_error when
/// the division leaves a non-normalizable Gaussian.
GaussianNatural cavity(const GaussianNatural& q_old, const GaussianNatural& t_old);

/// Per-example reparameterised gradients over a batch, averaged over the MC
/// noise draws (one shared noise vector per draw). Row i is the gradient for
/// shard[batch[i]], layout [d mu | d rho].
std::vector<std::vector<double>> per_example_batch_grads(const Likelihood& lik,
                                                         const VariationalParams& vp,
                                                         std::span<const Example> shard,
                                                         std::span<const std::size_t> batch,
                                                         const std::vector<std::vector<double>>& noise);

/// Stochastic gradient of the local free energy
///   KL(q || cavity) - sum over the shard of E_q[log p(e | w)],
/// the likelihood term estimated from the batch at full-shard scale.
std::vector<double> local_objective_grad(const Likelihood& lik, const VariationalParams& vp,
                                         const GaussianNatural& cav,
                                         std::span<const Example> shard,
                                         std::span<const std::size_t> batch,
                                         const std::vector<std::vector<double>>& noise);

/// Adagrad with per-coordinate accumulators starting at zero.
class Adagrad {
 public:
  Adagrad(std::size_t dim, double learning_rate, double epsilon)
      : accum_(dim, 0.0), lr_(learning_rate), eps_(epsilon) {}

  void step(VariationalParams& vp, std::span<const double> grad);

 private:
  std::vector<double> accum_;
  double lr_;
  double eps_;
};

/// Runs cfg.n_steps Adagrad iterations of the local free energy starting
/// from q_old's moments. n_steps = 0 returns the start point unchanged.
VariationalParams local_optimize(const Likelihood& lik, std::span<const Example> shard,
                                 const GaussianNatural& t_old, const GaussianNatural& q_old,
                                 const LocalOptConfig& cfg, Generator& rng);

struct DpRoundResult {
  VariationalParams vp;
  std::size_t steps_taken = 0;
  bool exhausted = false;
};

/// Differentially private variant: the data-dependent gradient term is
/// clipped per example, noised, and averaged over the expected lot size
/// sample_rate * N_m; the ledger advances once per completed step and the
/// budget is checked before every step, so a round may stop early. With
/// noise_scale = 0 the mechanism and accounting are disabled and the loop is
/// arithmetic-identical to local_optimize on the same rng stream.
DpRoundResult local_optimize_dp(const Likelihood& lik, std::span<const Example> shard,
                                const GaussianNatural& t_old, const GaussianNatural& q_old,
                                const LocalOptConfig& cfg, const PrivacyParams& priv,
                                MomentsLedger& ledger, Generator& rng);

/// Raw factor update q_new / q_old in natural parameters.
GaussianNatural compute_delta(const GaussianMoment& q_new, const GaussianNatural& q_old);

GaussianNatural apply_damping(const GaussianNatural& delta_raw, double damping);

/// q += delta, factors[m].t_m += delta. Returns false (state untouched) when
/// the updated q would not be normalizable.
bool server_apply(ServerState& server, std::size_t m, const GaussianNatural& delta);

}  // namespace fedbayes
