#include "fedbayes/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "fedbayes/errors.hpp"

namespace fedbayes {

Schedule make_schedule(std::span<const std::size_t> client_sizes) {
  Schedule s;
  s.weights.reserve(client_sizes.size());
  double total = 0.0;
  for (auto n : client_sizes) {
    if (n == 0) throw std::invalid_argument("every client must hold at least one example");
    total += 1.0 / static_cast<double>(n);
  }
  for (auto n : client_sizes) s.weights.push_back(1.0 / static_cast<double>(n) / total);
  return s;
}

std::size_t select_next_client(const Schedule& s, Generator& rng) {
  double total = 0.0;
  for (double w : s.weights) total += w;
  if (total <= 0.0) throw std::logic_error("all clients exhausted: run complete");
  return rng.categorical(s.weights);
}

void deactivate(Schedule& s, std::size_t m) {
  if (m >= s.weights.size()) throw std::out_of_range("client id out of range");
  s.weights[m] = 0.0;
}

namespace {

GaussianNatural standard_prior(std::size_t d, double variance) {
  GaussianMoment m(std::vector<double>(d, 0.0), std::vector<double>(d, variance));
  return to_natural(m);
}

/// One stochastic gradient of the global free energy, computed by client m
/// on its shard: the prior-KL term is scaled by the client's share of the
/// data, the likelihood term by shard size over batch size.
std::vector<double> global_vi_grad(const Likelihood& lik, const VariationalParams& vp,
                                   const GaussianNatural& prior, std::span<const Example> shard,
                                   std::span<const std::size_t> batch, double n_total,
                                   const std::vector<std::vector<double>>& noise) {
  const std::size_t d = vp.dim();
  const double n_m = static_cast<double>(shard.size());
  std::vector<double> grad = kl_grad(vp, prior);
  for (double& g : grad) g *= n_m / n_total;
  if (batch.empty()) return grad;
  const auto per_example = per_example_batch_grads(lik, vp, shard, batch, noise);
  std::vector<double> sum(2 * d, 0.0);
  for (const auto& g : per_example)
    for (std::size_t i = 0; i < 2 * d; ++i) sum[i] += g[i];
  const double denom = static_cast<double>(batch.size());
  for (std::size_t i = 0; i < 2 * d; ++i) grad[i] -= n_m * (sum[i] / denom);
  return grad;
}

std::vector<std::vector<double>> draw_noise(std::size_t mc_samples, std::size_t d,
                                            Generator& rng) {
  std::vector<std::vector<double>> noise(std::max<std::size_t>(mc_samples, 1));
  for (auto& eps : noise) eps = rng.normal_vector(d);
  return noise;
}

}  // namespace

RunResult run(const std::vector<std::vector<Example>>& shards, std::span<const Example> test,
              const RunConfig& cfg, std::uint64_t seed) {
  const std::size_t m_clients = shards.size();
  if (m_clients == 0) throw std::invalid_argument("need at least one client");
  for (const auto& s : shards)
    if (s.empty()) throw std::invalid_argument("every shard must be nonempty");
  const std::size_t d = shards[0][0].features.size();

  const GaussianNatural prior = standard_prior(d, cfg.prior_variance);
  ServerState server = make_server(prior, m_clients);

  std::vector<std::size_t> sizes(m_clients);
  double n_total = 0.0;
  for (std::size_t m = 0; m < m_clients; ++m) {
    sizes[m] = shards[m].size();
    n_total += static_cast<double>(sizes[m]);
  }
  Schedule schedule = make_schedule(sizes);

  Generator root(seed);
  std::vector<Generator> client_rng;
  client_rng.reserve(m_clients);
  for (std::size_t m = 0; m < m_clients; ++m) client_rng.push_back(root.child(m));
  Generator sched_rng = root.child(m_clients);

  const LogisticLikelihood lik;
  const bool dp = cfg.engine == Engine::dp_pvi;

  // Global VI state lives on the server: one parameter vector, one optimiser.
  VariationalParams global_vp = VariationalParams::from_moment(to_moment(prior));
  Adagrad global_opt(2 * d, cfg.local.learning_rate, cfg.local.adagrad_epsilon);
  std::vector<std::vector<std::size_t>> scratch(m_clients);
  std::vector<std::size_t> batch;

  RunResult result;
  result.exhaustion_comm.assign(m_clients, -1);
  std::size_t active = m_clients;
  std::size_t comm = 0;

  while (comm < cfg.max_communications) {
    if (dp && active == 0) break;
    const std::size_t m = select_next_client(schedule, sched_rng);
    Generator& rng = client_rng[m];
    const auto& shard = shards[m];
    bool communicated = true;

    switch (cfg.engine) {
      case Engine::pvi: {
        try {
          const VariationalParams vp =
              local_optimize(lik, shard, server.factors[m].t_m, server.q, cfg.local, rng);
          const GaussianNatural delta =
              apply_damping(compute_delta(vp.to_moment(), server.q), cfg.local.damping);
          if (!server_apply(server, m, delta)) ++result.rejected_updates;
        } catch (const cavity_collapse_error&) {
          ++result.skipped_rounds;
        }
        break;
      }
      case Engine::dp_pvi: {
        PrivacyParams priv = cfg.privacy;
        priv.delta = delta_for_client(shard.size());
        try {
          const DpRoundResult round = local_optimize_dp(
              lik, shard, server.factors[m].t_m, server.q, cfg.local, priv,
              server.factors[m].ledger, rng);
          if (round.steps_taken > 0) {
            const GaussianNatural delta =
                apply_damping(compute_delta(round.vp.to_moment(), server.q), cfg.local.damping);
            if (!server_apply(server, m, delta)) ++result.rejected_updates;
          } else if (round.exhausted) {
            communicated = false;
          }
          if (round.exhausted) {
            server.factors[m].exhausted = true;
            deactivate(schedule, m);
            --active;
          }
        } catch (const cavity_collapse_error&) {
          ++result.skipped_rounds;
        }
        break;
      }
      case Engine::global_vi: {
        sample_minibatch(cfg.local.minibatch, shard.size(), rng, scratch[m], batch);
        const auto noise = draw_noise(cfg.local.mc_samples, d, rng);
        const auto grad = global_vi_grad(lik, global_vp, prior, shard, batch, n_total, noise);
        global_opt.step(global_vp, grad);
        break;
      }
    }

    if (!communicated) {
      // A zero-step exhausted round sends nothing; the client just drops out.
      result.exhaustion_comm[m] = static_cast<std::ptrdiff_t>(comm);
      continue;
    }
    ++comm;
    if (dp && server.factors[m].exhausted)
      result.exhaustion_comm[m] = static_cast<std::ptrdiff_t>(comm);

    if (comm % cfg.eval_every == 0 || comm == cfg.max_communications) {
      const GaussianMoment q_mom =
          cfg.engine == Engine::global_vi ? global_vp.to_moment() : to_moment(server.q);
      const Metrics metrics = evaluate(q_mom, test);
      RunRecord rec;
      rec.communication = comm;
      rec.client_id = m;
      rec.epsilon_spent =
          dp ? epsilon(server.factors[m].ledger, delta_for_client(shard.size())) : 0.0;
      rec.test_accuracy = metrics.accuracy;
      rec.test_avg_ll = metrics.avg_log_lik;
      result.records.push_back(rec);
    }
  }

  result.communications = comm;
  result.final_q =
      cfg.engine == Engine::global_vi ? to_natural(global_vp.to_moment()) : server.q;
  return result;
}

Metrics final_window_mean(const RunResult& r, std::size_t window) {
  if (r.records.empty()) throw std::logic_error("run produced no evaluation records");
  const std::size_t take = std::min(window, r.records.size());
  Metrics m;
  for (std::size_t i = r.records.size() - take; i < r.records.size(); ++i) {
    m.accuracy += r.records[i].test_accuracy;
    m.avg_log_lik += r.records[i].test_avg_ll;
  }
  m.accuracy /= static_cast<double>(take);
  m.avg_log_lik /= static_cast<double>(take);
  return m;
}

std::vector<SweepCell> sweep(std::span<const Example> train, std::span<const Example> test,
                             std::span<const double> kappas, std::span<const double> rhos,
                             const PartitionSpec& base_spec, const RunConfig& first,
                             const RunConfig& second, std::span<const std::uint64_t> seeds,
                             std::uint64_t partition_seed, unsigned n_threads) {
  if (seeds.empty()) throw std::invalid_argument("need at least one seed");
  std::vector<SweepCell> cells(kappas.size() * rhos.size());
  for (std::size_t ki = 0; ki < kappas.size(); ++ki)
    for (std::size_t ri = 0; ri < rhos.size(); ++ri) {
      auto& c = cells[ki * rhos.size() + ri];
      c.kappa = kappas[ki];
      c.rho = rhos[ri];
    }

  const Generator partition_root(partition_seed);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      SweepCell& cell = cells[i];
      try {
        PartitionSpec spec = base_spec;
        spec.kappa = cell.kappa;
        spec.rho = cell.rho;
        Generator prng = partition_root.child(i);
        Partition part;
        try {
          part = partition(train, spec, prng);
        } catch (const infeasible_partition_error&) {
          cell.valid = false;
          continue;
        }
        const auto shards = materialize_shards(train, part);
        double acc_first = 0.0, ll_first = 0.0, acc_second = 0.0, ll_second = 0.0;
        for (auto seed : seeds) {
          const Metrics a = final_window_mean(run(shards, test, first, seed));
          const Metrics b = final_window_mean(run(shards, test, second, seed));
          acc_first += a.accuracy;
          ll_first += a.avg_log_lik;
          acc_second += b.accuracy;
          ll_second += b.avg_log_lik;
        }
        const double n = static_cast<double>(seeds.size());
        cell.acc_diff = (acc_first - acc_second) / n;
        cell.ll_diff = (ll_first - ll_second) / n;
        cell.valid = true;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(n_threads, cells.size()));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return cells;
}

}  // namespace fedbayes
