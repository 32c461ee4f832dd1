#include "fedbayes/pvi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedbayes/errors.hpp"

namespace fedbayes {

ServerState make_server(const GaussianNatural& prior, std::size_t m_clients) {
  ServerState s;
  s.prior = prior;
  s.q = prior;
  s.factors.resize(m_clients);
  for (auto& f : s.factors) f.t_m = GaussianNatural::zero(prior.dim());
  return s;
}

void sample_minibatch(const MinibatchSpec& spec, std::size_t n, Generator& rng,
                      std::vector<std::size_t>& scratch, std::vector<std::size_t>& out) {
  out.clear();
  if (n == 0) return;
  if (spec.kind == MinibatchKind::fixed) {
    if (scratch.size() != n) {
      scratch.resize(n);
      std::iota(scratch.begin(), scratch.end(), std::size_t{0});
    }
    const std::size_t take = std::min(spec.fixed_size, n);
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(scratch[i], scratch[j]);
      out.push_back(scratch[i]);
    }
  } else {
    if (spec.poisson_rate <= 0.0 || spec.poisson_rate > 1.0)
      throw std::invalid_argument("poisson rate must be in (0, 1]");
    if (spec.poisson_rate == 1.0) {
      out.resize(n);
      std::iota(out.begin(), out.end(), std::size_t{0});
      return;
    }
    for (std::size_t i = 0; i < n; ++i)
      if (rng.uniform() < spec.poisson_rate) out.push_back(i);
  }
}

GaussianNatural cavity(const GaussianNatural& q_old, const GaussianNatural& t_old) {
  GaussianNatural cav = divide(q_old, t_old);
  if (!cav.normalizable())
    throw cavity_collapse_error("cavity is not normalizable; skip this round");
  return cav;
}

std::vector<std::vector<double>> per_example_batch_grads(const Likelihood& lik,
                                                         const VariationalParams& vp,
                                                         std::span<const Example> shard,
                                                         std::span<const std::size_t> batch,
                                                         const std::vector<std::vector<double>>& noise) {
  const std::size_t d = vp.dim();
  if (noise.empty()) throw std::invalid_argument("at least one noise draw is required");
  std::vector<std::vector<double>> grads(batch.size());
  const double inv_s = 1.0 / static_cast<double>(noise.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto& g = grads[i];
    g.assign(2 * d, 0.0);
    for (const auto& eps : noise) add_reparam_grad(lik, vp, shard[batch[i]], eps, g);
    if (noise.size() > 1)
      for (double& v : g) v *= inv_s;
  }
  return grads;
}

std::vector<double> local_objective_grad(const Likelihood& lik, const VariationalParams& vp,
                                         const GaussianNatural& cav,
                                         std::span<const Example> shard,
                                         std::span<const std::size_t> batch,
                                         const std::vector<std::vector<double>>& noise) {
  const std::size_t d = vp.dim();
  std::vector<double> grad = kl_grad(vp, cav);
  if (batch.empty()) return grad;
  const auto per_example = per_example_batch_grads(lik, vp, shard, batch, noise);
  std::vector<double> avg(2 * d, 0.0);
  for (const auto& g : per_example)
    for (std::size_t i = 0; i < 2 * d; ++i) avg[i] += g[i];
  const double denom = static_cast<double>(batch.size());
  const double n_m = static_cast<double>(shard.size());
  for (std::size_t i = 0; i < 2 * d; ++i) grad[i] -= n_m * (avg[i] / denom);
  return grad;
}

void Adagrad::step(VariationalParams& vp, std::span<const double> grad) {
  const std::size_t d = vp.dim();
  if (grad.size() != 2 * d || accum_.size() != 2 * d)
    throw dimension_mismatch_error("gradient length does not match parameter count");
  for (std::size_t i = 0; i < 2 * d; ++i) {
    accum_[i] += grad[i] * grad[i];
    const double scaled = lr_ * grad[i] / std::sqrt(accum_[i] + eps_);
    if (i < d)
      vp.mu[i] -= scaled;
    else
      vp.rho[i - d] -= scaled;
  }
}

namespace {

std::vector<std::vector<double>> draw_noise(std::size_t mc_samples, std::size_t d,
                                            Generator& rng) {
  std::vector<std::vector<double>> noise(std::max<std::size_t>(mc_samples, 1));
  for (auto& eps : noise) eps = rng.normal_vector(d);
  return noise;
}

}  // namespace

VariationalParams local_optimize(const Likelihood& lik, std::span<const Example> shard,
                                 const GaussianNatural& t_old, const GaussianNatural& q_old,
                                 const LocalOptConfig& cfg, Generator& rng) {
  const GaussianNatural cav = cavity(q_old, t_old);
  VariationalParams vp = VariationalParams::from_moment(to_moment(q_old));
  const std::size_t d = vp.dim();
  Adagrad opt(2 * d, cfg.learning_rate, cfg.adagrad_epsilon);
  std::vector<std::size_t> scratch;
  std::vector<std::size_t> batch;
  for (std::size_t step = 0; step < cfg.n_steps; ++step) {
    sample_minibatch(cfg.minibatch, shard.size(), rng, scratch, batch);
    const auto noise = draw_noise(cfg.mc_samples, d, rng);
    const auto grad = local_objective_grad(lik, vp, cav, shard, batch, noise);
    opt.step(vp, grad);
  }
  return vp;
}

DpRoundResult local_optimize_dp(const Likelihood& lik, std::span<const Example> shard,
                                const GaussianNatural& t_old, const GaussianNatural& q_old,
                                const LocalOptConfig& cfg, const PrivacyParams& priv,
                                MomentsLedger& ledger, Generator& rng) {
  if (cfg.minibatch.kind != MinibatchKind::poisson ||
      cfg.minibatch.poisson_rate != priv.sample_rate)
    throw contract_violation_error(
        "private optimisation requires poisson minibatches at the accounted sample rate");
  const bool accounted = priv.noise_scale > 0.0;

  const GaussianNatural cav = cavity(q_old, t_old);
  DpRoundResult res;
  res.vp = VariationalParams::from_moment(to_moment(q_old));
  const std::size_t d = res.vp.dim();
  Adagrad opt(2 * d, cfg.learning_rate, cfg.adagrad_epsilon);

  std::vector<double> per_step;
  if (accounted) per_step = step_rdp(priv.sample_rate, priv.noise_scale);
  const double lot_size = priv.sample_rate * static_cast<double>(shard.size());
  std::vector<std::size_t> scratch;
  std::vector<std::size_t> batch;
  std::vector<double> gauss(2 * d, 0.0);

  for (std::size_t step = 0; step < cfg.n_steps; ++step) {
    if (accounted && budget_exhausted(ledger, priv, per_step)) {
      res.exhausted = true;
      break;
    }
    sample_minibatch(cfg.minibatch, shard.size(), rng, scratch, batch);
    const auto noise = draw_noise(cfg.mc_samples, d, rng);

    std::vector<double> grad = kl_grad(res.vp, cav);
    const auto per_example = per_example_batch_grads(lik, res.vp, shard, batch, noise);
    std::vector<std::vector<double>> clipped(per_example.size());
    for (std::size_t i = 0; i < per_example.size(); ++i)
      clipped[i] = clip(per_example[i], priv.clip_c);
    if (accounted) rng.normal_fill(gauss);
    const auto avg = noisy_average(clipped, priv.clip_c, priv.noise_scale, lot_size, gauss);
    const double n_m = static_cast<double>(shard.size());
    for (std::size_t i = 0; i < 2 * d; ++i) grad[i] -= n_m * avg[i];

    if (accounted) ledger.accumulate(per_step);
    opt.step(res.vp, grad);
    ++res.steps_taken;
  }
  return res;
}

GaussianNatural compute_delta(const GaussianMoment& q_new, const GaussianNatural& q_old) {
  return divide(to_natural(q_new), q_old);
}

GaussianNatural apply_damping(const GaussianNatural& delta_raw, double damping) {
  GaussianNatural out = delta_raw;
  for (double& v : out.eta1) v *= damping;
  for (double& v : out.eta2) v *= damping;
  return out;
}

bool server_apply(ServerState& server, std::size_t m, const GaussianNatural& delta) {
  if (m >= server.factors.size()) throw std::out_of_range("client id out of range");
  GaussianNatural candidate = multiply(server.q, delta);
  if (!candidate.normalizable()) return false;
  server.q = std::move(candidate);
  server.factors[m].t_m = multiply(server.factors[m].t_m, delta);
  return true;
}

}  // namespace fedbayes
