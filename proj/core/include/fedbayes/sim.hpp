#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedbayes/data.hpp"
#include "fedbayes/model.hpp"
#include "fedbayes/privacy.hpp"
#include "fedbayes/pvi.hpp"
#include "fedbayes/rng.hpp"

namespace fedbayes {

enum class Engine { global_vi, pvi, dp_pvi };

/// Asynchronous selection: clients are drawn with probability proportional
/// to 1/N_m, so small clients update more often. Exhausted clients carry
/// weight zero.
struct Schedule {
  std::vector<double> weights;
};

Schedule make_schedule(std::span<const std::size_t> client_sizes);

/// Categorical draw over the active weights. Throws when every client is
/// exhausted (the run-complete signal).
std::size_t select_next_client(const Schedule& s, Generator& rng);

void deactivate(Schedule& s, std::size_t m);

struct RunConfig {
  Engine engine = Engine::pvi;
  std::size_t max_communications = 5000;
  std::size_t eval_every = 1;
  double prior_variance = 1.0;
  LocalOptConfig local;
  PrivacyParams privacy;
};

/// One evaluation point of a run. epsilon_spent is the communicating
/// client's cumulative spend at its own delta; zero for non-private engines.
struct RunRecord {
  std::size_t communication = 0;
  std::size_t client_id = 0;
  double epsilon_spent = 0.0;
  double test_accuracy = 0.0;
  double test_avg_ll = 0.0;
};

struct RunResult {
  std::vector<RunRecord> records;
  GaussianNatural final_q;
  /// Completed-communication count at the moment each client exhausted its
  /// budget; -1 for clients that never did.
  std::vector<std::ptrdiff_t> exhaustion_comm;
  std::size_t communications = 0;
  std::size_t rejected_updates = 0;
  std::size_t skipped_rounds = 0;
};

/// Full federated training loop: repeatedly select a client, run its local
/// round, apply the delta, evaluate on the cadence. Deterministic given
/// (shards, config, seed); every client owns a child random stream.
RunResult run(const std::vector<std::vector<Example>>& shards, std::span<const Example> test,
              const RunConfig& cfg, std::uint64_t seed);

/// Mean metrics over the last `window` evaluation records.
Metrics final_window_mean(const RunResult& r, std::size_t window = 10);

struct SweepCell {
  double kappa = 0.0;
  double rho = 0.0;
  bool valid = false;
  /// Final-window metric means, engine one minus engine two, averaged over
  /// seeds.
  double acc_diff = 0.0;
  double ll_diff = 0.0;
};

/// Runs two engines over the (kappa, rho) grid, seeds shared, and reports
/// final-window differences per cell. Cells whose partition is infeasible
/// come back with valid = false. Cells execute in parallel across threads.
std::vector<SweepCell> sweep(std::span<const Example> train, std::span<const Example> test,
                             std::span<const double> kappas, std::span<const double> rhos,
                             const PartitionSpec& base_spec, const RunConfig& first,
                             const RunConfig& second, std::span<const std::uint64_t> seeds,
                             std::uint64_t partition_seed, unsigned n_threads);

}  // namespace fedbayes
