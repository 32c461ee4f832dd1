#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedbayes/config.hpp"
#include "fedbayes/csv.hpp"
#include "fedbayes/data.hpp"
#include "fedbayes/errors.hpp"
#include "fedbayes/privacy.hpp"
#include "fedbayes/sim.hpp"

namespace fb = fedbayes;
namespace fs = std::filesystem;

namespace {

std::string resolve_data_dir(const std::string& cli_value, const std::string& cfg_value) {
  if (!cli_value.empty()) return cli_value;
  if (!cfg_value.empty()) return cfg_value;
  if (const char* env = std::getenv("FEDBAYES_DATA_DIR"); env && *env) return env;
  return "data";
}

struct MeanStdev {
  double mean = 0.0;
  double stdev = 0.0;
};

MeanStdev mean_stdev(const std::vector<double>& xs) {
  MeanStdev out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.stdev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

void print_partition_summary(const fb::Partition& part) {
  std::cout << "client  size    positive%  delta     half\n";
  for (std::size_t m = 0; m < part.shards.size(); ++m) {
    const auto& s = part.shards[m];
    std::printf("%-7zu %-7zu %-10.2f %-9.0e %s\n", m, s.size, 100.0 * s.positive_fraction,
                s.delta, s.small_half ? "small" : "large");
  }
  std::printf("majority class fraction: %.4f\n", part.lambda_major);
}

int cmd_partition(const fb::ExperimentConfig& cfg, const std::string& out_path) {
  const std::string dir = resolve_data_dir("", cfg.dataset_path);
  const fb::Dataset ds = fb::load_adult_split(dir, cfg.train_fraction, cfg.split_seed);
  fb::Generator rng = fb::Generator(cfg.partition_seed).child(0);
  const fb::Partition part = fb::partition(ds.train, cfg.partition, rng);
  print_partition_summary(part);

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << fb::manifest_json(part) << '\n';
  std::cout << "manifest written to " << out_path << '\n';
  return 0;
}

int cmd_run(const fb::ExperimentConfig& cfg) {
  const std::string dir = resolve_data_dir("", cfg.dataset_path);
  const fb::Dataset ds = fb::load_adult_split(dir, cfg.train_fraction, cfg.split_seed);
  fb::Generator prng = fb::Generator(cfg.partition_seed).child(0);
  const fb::Partition part = fb::partition(ds.train, cfg.partition, prng);
  const auto shards = fb::materialize_shards(ds.train, part);

  fs::create_directories(cfg.out_dir);
  const std::string tag = fb::engine_name(cfg.run.engine) +
                          (cfg.distribution.empty() ? "" : "_" + cfg.distribution);

  std::vector<double> accs, lls;
  nlohmann::json per_seed = nlohmann::json::array();
  for (auto seed : cfg.seeds) {
    const fb::RunResult result = fb::run(shards, ds.test, cfg.run, seed);
    const fs::path csv_path = fs::path(cfg.out_dir) / ("run_" + tag + "_seed" +
                              std::to_string(seed) + ".csv");
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
    fb::write_run_csv(csv, result.records);

    const fb::Metrics final = fb::final_window_mean(result);
    accs.push_back(final.accuracy);
    lls.push_back(final.avg_log_lik);
    per_seed.push_back({{"seed", seed},
                        {"accuracy", final.accuracy},
                        {"avg_ll", final.avg_log_lik},
                        {"communications", result.communications}});
    std::printf("seed %llu: accuracy %.4f, avg ll %.4f (%zu communications)\n",
                static_cast<unsigned long long>(seed), final.accuracy, final.avg_log_lik,
                result.communications);
  }

  const MeanStdev acc = mean_stdev(accs);
  const MeanStdev ll = mean_stdev(lls);
  nlohmann::json summary{{"engine", fb::engine_name(cfg.run.engine)},
                         {"distribution", cfg.distribution},
                         {"seeds", cfg.seeds},
                         {"accuracy", {{"mean", acc.mean}, {"stdev", acc.stdev}}},
                         {"avg_ll", {{"mean", ll.mean}, {"stdev", ll.stdev}}},
                         {"per_seed", std::move(per_seed)}};
  const fs::path summary_path = fs::path(cfg.out_dir) / ("summary_" + tag + ".json");
  std::ofstream js(summary_path);
  if (!js) throw std::runtime_error("cannot write " + summary_path.string());
  js << summary.dump(2) << '\n';
  std::printf("accuracy %.4f +- %.4f, avg ll %.4f +- %.4f\n", acc.mean, acc.stdev, ll.mean,
              ll.stdev);
  std::cout << "summary written to " << summary_path.string() << '\n';
  return 0;
}

int cmd_sweep(const fb::ExperimentConfig& cfg, const std::vector<double>& kappas,
              const std::vector<double>& rhos, unsigned threads, std::size_t eval_every_pvi,
              std::size_t eval_every_gvi) {
  const std::string dir = resolve_data_dir("", cfg.dataset_path);
  const fb::Dataset ds = fb::load_adult_split(dir, cfg.train_fraction, cfg.split_seed);

  fb::RunConfig pvi_cfg = fb::engine_defaults(fb::Engine::pvi);
  pvi_cfg.eval_every = eval_every_pvi;
  fb::RunConfig gvi_cfg = fb::engine_defaults(fb::Engine::global_vi);
  gvi_cfg.eval_every = eval_every_gvi;

  const auto cells = fb::sweep(ds.train, ds.test, kappas, rhos, cfg.partition, pvi_cfg, gvi_cfg,
                               cfg.seeds, cfg.partition_seed, threads);

  fs::create_directories(cfg.out_dir);
  const fs::path out_path = fs::path(cfg.out_dir) / "sweep.csv";
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path.string());
  fb::write_sweep_csv(out, cells);
  fb::write_sweep_csv(std::cout, cells);
  std::cout << "sweep written to " << out_path.string() << '\n';
  return 0;
}

int cmd_accountant(double q, double sigma, std::size_t steps, double delta) {
  fb::MomentsLedger ledger;
  if (steps > 0) {
    const auto per_step = fb::step_rdp(q, sigma);
    for (std::size_t t = 0; t < steps; ++t) ledger.accumulate(per_step);
  }
  std::printf("%.12g\n", fb::epsilon(ledger, delta));
  return 0;
}

int cmd_evaluate(const fb::ExperimentConfig& cfg) {
  const std::string dir = resolve_data_dir("", cfg.dataset_path);
  const fb::Dataset ds = fb::load_adult_split(dir, cfg.train_fraction, cfg.split_seed);
  std::size_t positives = 0;
  for (const auto& e : ds.train) positives += e.label == 1 ? 1 : 0;
  std::printf("train %zu, test %zu, features %zu, train positive fraction %.4f\n",
              ds.train.size(), ds.test.size(), ds.dim,
              static_cast<double>(positives) / static_cast<double>(ds.train.size()));
  const fb::GaussianMoment prior(std::vector<double>(ds.dim, 0.0),
                                 std::vector<double>(ds.dim, cfg.run.prior_variance));
  const fb::Metrics m = fb::evaluate(prior, ds.test);
  std::printf("prior predictive: accuracy %.4f, avg ll %.4f\n", m.accuracy, m.avg_log_lik);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated Bayesian logistic regression simulator"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir, distribution, engine;
  std::vector<std::uint64_t> seeds;
  std::optional<double> epsilon_max;
  std::optional<std::size_t> max_comms, eval_every;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config JSON");
    sub->add_option("--data", data_dir, "dataset directory");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--distribution", distribution, "client distribution A-D");
    sub->add_option("--seed", seeds, "random seed (repeatable)");
  };

  auto* partition_cmd = app.add_subcommand("partition", "partition the training data");
  add_common(partition_cmd);
  double rho = -1.0, kappa = 0.0;
  bool kappa_set = false;
  std::size_t n_override = 0;
  std::string manifest_path = "manifest.json";
  partition_cmd->add_option("--rho", rho, "size imbalance in [0,1)");
  partition_cmd->add_option("--kappa", kappa, "class imbalance")->each([&](const std::string&) {
    kappa_set = true;
  });
  partition_cmd->add_option("--n-total-override", n_override,
                            "pool size used by the client-size formulas");
  partition_cmd->add_option("--manifest", manifest_path, "manifest output path");

  auto* run_cmd = app.add_subcommand("run", "train and evaluate");
  add_common(run_cmd);
  run_cmd->add_option("--engine", engine, "global_vi, pvi or dp_pvi");
  run_cmd->add_option("--epsilon-max", epsilon_max, "per-client privacy budget");
  run_cmd->add_option("--max-communications", max_comms, "communication cap");
  run_cmd->add_option("--eval-every", eval_every, "evaluation cadence");

  auto* sweep_cmd = app.add_subcommand("sweep", "kappa x rho difference table");
  add_common(sweep_cmd);
  std::vector<double> kappas{0.0, 0.95, -1.5, -3.0};
  std::vector<double> rhos{0.0, 0.6, 0.7, 0.9};
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::size_t eval_pvi = 10, eval_gvi = 100;
  sweep_cmd->add_option("--kappas", kappas, "kappa grid");
  sweep_cmd->add_option("--rhos", rhos, "rho grid");
  sweep_cmd->add_option("--threads", threads, "worker threads");
  sweep_cmd->add_option("--eval-every-pvi", eval_pvi, "evaluation cadence for the factor engine");
  sweep_cmd->add_option("--eval-every-global", eval_gvi, "evaluation cadence for global VI");

  auto* acct_cmd = app.add_subcommand("accountant", "print epsilon for (q, sigma, steps, delta)");
  double acct_q = 0.02, acct_sigma = 5.0, acct_delta = 1e-4;
  std::size_t acct_steps = 0;
  acct_cmd->add_option("--q", acct_q, "sample rate")->required();
  acct_cmd->add_option("--sigma", acct_sigma, "noise scale")->required();
  acct_cmd->add_option("--steps", acct_steps, "composed steps")->required();
  acct_cmd->add_option("--delta", acct_delta, "target delta")->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "dataset and prior-predictive summary");
  add_common(eval_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    fb::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = fb::load_config_file(config_path);
    if (!engine.empty()) {
      cfg.run = fb::engine_defaults(fb::engine_from_name(engine));
    } else if (config_path.empty()) {
      cfg.run = fb::engine_defaults(cfg.run.engine);
    }
    if (!data_dir.empty()) cfg.dataset_path = data_dir;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!seeds.empty()) cfg.seeds = seeds;
    if (!distribution.empty()) {
      cfg.distribution = distribution;
      fb::apply_distribution(cfg.partition, distribution);
    }
    if (epsilon_max) cfg.run.privacy.epsilon_max = *epsilon_max;
    if (max_comms) cfg.run.max_communications = *max_comms;
    if (eval_every) cfg.run.eval_every = *eval_every;

    if (partition_cmd->parsed()) {
      if (rho >= 0.0) cfg.partition.rho = rho;
      if (kappa_set) cfg.partition.kappa = kappa;
      if (n_override > 0) cfg.partition.n_total_override = n_override;
      return cmd_partition(cfg, manifest_path);
    }
    if (run_cmd->parsed()) return cmd_run(cfg);
    if (sweep_cmd->parsed()) return cmd_sweep(cfg, kappas, rhos, threads, eval_pvi, eval_gvi);
    if (acct_cmd->parsed()) return cmd_accountant(acct_q, acct_sigma, acct_steps, acct_delta);
    if (eval_cmd->parsed()) return cmd_evaluate(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
