#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "fedbayes/config.hpp"
#include "fedbayes/csv.hpp"
#include "fedbayes/data.hpp"

using namespace fedbayes;

namespace {

ExperimentConfig sample_config() {
  ExperimentConfig cfg;
  cfg.dataset_path = "data/income";
  cfg.distribution = "";
  cfg.run = engine_defaults(Engine::dp_pvi);
  cfg.run.eval_every = 10;
  cfg.run.local.mc_samples = 4;
  cfg.partition.m_clients = 10;
  cfg.partition.rho = 0.35;
  cfg.partition.kappa = -0.25;
  cfg.partition.n_total_override = 39074;
  cfg.seeds = {7, 8, 9};
  cfg.out_dir = "results";
  cfg.train_fraction = 0.75;
  cfg.split_seed = 5;
  cfg.partition_seed = 6;
  return cfg;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("serialisation round-trips every field") {
  const auto cfg = sample_config();
  const auto back = parse_config(serialize_config(cfg));

  CHECK(back.dataset_path == cfg.dataset_path);
  CHECK(back.distribution == cfg.distribution);
  CHECK(back.out_dir == cfg.out_dir);
  CHECK(back.seeds == cfg.seeds);
  CHECK(back.train_fraction == cfg.train_fraction);
  CHECK(back.split_seed == cfg.split_seed);
  CHECK(back.partition_seed == cfg.partition_seed);

  CHECK(back.partition.m_clients == cfg.partition.m_clients);
  CHECK(back.partition.rho == cfg.partition.rho);
  CHECK(back.partition.kappa == cfg.partition.kappa);
  CHECK(back.partition.n_total_override == cfg.partition.n_total_override);

  CHECK(back.run.engine == cfg.run.engine);
  CHECK(back.run.max_communications == cfg.run.max_communications);
  CHECK(back.run.eval_every == cfg.run.eval_every);
  CHECK(back.run.prior_variance == cfg.run.prior_variance);
  CHECK(back.run.local.n_steps == cfg.run.local.n_steps);
  CHECK(back.run.local.learning_rate == cfg.run.local.learning_rate);
  CHECK(back.run.local.damping == cfg.run.local.damping);
  CHECK(back.run.local.minibatch.kind == cfg.run.local.minibatch.kind);
  CHECK(back.run.local.minibatch.fixed_size == cfg.run.local.minibatch.fixed_size);
  CHECK(back.run.local.minibatch.poisson_rate == cfg.run.local.minibatch.poisson_rate);
  CHECK(back.run.local.mc_samples == cfg.run.local.mc_samples);
  CHECK(back.run.local.adagrad_epsilon == cfg.run.local.adagrad_epsilon);
  CHECK(back.run.privacy.clip_c == cfg.run.privacy.clip_c);
  CHECK(back.run.privacy.noise_scale == cfg.run.privacy.noise_scale);
  CHECK(back.run.privacy.sample_rate == cfg.run.privacy.sample_rate);
  CHECK(back.run.privacy.delta == cfg.run.privacy.delta);
  CHECK(back.run.privacy.epsilon_max == cfg.run.privacy.epsilon_max);
}

TEST_CASE("config files survive a save and load cycle") {
  namespace fs = std::filesystem;
  const auto path = (fs::temp_directory_path() / "fedbayes_config_test.json").string();
  const auto cfg = sample_config();
  save_config_file(cfg, path);
  const auto back = load_config_file(path);
  CHECK(back.partition.rho == cfg.partition.rho);
  CHECK(back.seeds == cfg.seeds);
  CHECK(serialize_config(back) == serialize_config(cfg));
  CHECK_THROWS(load_config_file("/nonexistent/config.json"));
}

TEST_CASE("named distributions fix the partition knobs") {
  PartitionSpec spec;
  apply_distribution(spec, "A");
  CHECK(spec.rho == 0.0);
  CHECK(spec.kappa == 0.0);
  apply_distribution(spec, "B");
  CHECK(spec.rho == 0.9);
  CHECK(spec.kappa == 0.95);
  apply_distribution(spec, "C");
  CHECK(spec.rho == 0.7);
  CHECK(spec.kappa == -3.0);
  apply_distribution(spec, "D");
  CHECK(spec.rho == 0.6);
  CHECK(spec.kappa == -1.5);
  CHECK_THROWS(apply_distribution(spec, "E"));

  // A named distribution wins over stored rho and kappa after parsing.
  auto cfg = sample_config();
  cfg.distribution = "C";
  const auto back = parse_config(serialize_config(cfg));
  CHECK(back.partition.rho == 0.7);
  CHECK(back.partition.kappa == -3.0);
}

TEST_CASE("engine names map both ways") {
  for (auto e : {Engine::global_vi, Engine::pvi, Engine::dp_pvi})
    CHECK(engine_from_name(engine_name(e)) == e);
  CHECK_THROWS(engine_from_name("madeup"));
}

TEST_CASE("stock hyperparameters per engine") {
  const auto p = engine_defaults(Engine::pvi);
  CHECK(p.max_communications == 5000);
  CHECK(p.local.n_steps == 25);
  CHECK(p.local.learning_rate == 2.0);
  CHECK(p.local.damping == 0.1);
  CHECK(p.local.minibatch.kind == MinibatchKind::fixed);
  CHECK(p.local.minibatch.fixed_size == 100);
  CHECK(p.prior_variance == 1.0);

  const auto d = engine_defaults(Engine::dp_pvi);
  CHECK(d.local.learning_rate == 0.5);
  CHECK(d.local.minibatch.kind == MinibatchKind::poisson);
  CHECK(d.local.minibatch.poisson_rate == 0.02);
  CHECK(d.privacy.clip_c == 75.0);
  CHECK(d.privacy.noise_scale == 5.0);
  CHECK(d.privacy.sample_rate == 0.02);
  CHECK(d.privacy.epsilon_max == 1.0);

  const auto g = engine_defaults(Engine::global_vi);
  CHECK(g.max_communications == 50000);
  CHECK(g.local.n_steps == 1);
  CHECK(g.local.learning_rate == 0.05);
  CHECK(g.local.minibatch.fixed_size == 100);
}

TEST_CASE("manifests expose shard structure as data") {
  std::vector<Example> pool;
  for (int i = 0; i < 76; ++i) pool.push_back(Example{{0.0}, -1});
  for (int i = 0; i < 24; ++i) pool.push_back(Example{{1.0}, 1});
  Generator rng(3);
  PartitionSpec spec;
  spec.m_clients = 2;
  const auto part = partition(pool, spec, rng);
  const auto text = manifest_json(part);
  CHECK(text.find("\"lambda_major\"") != std::string::npos);
  CHECK(text.find("\"shards\"") != std::string::npos);
  CHECK(text.find("\"positive_fraction\"") != std::string::npos);
  CHECK(text.find("\"delta\"") != std::string::npos);
  CHECK(text.find("\"indices\"") != std::string::npos);
}

TEST_CASE("doubles print as shortest round-trip strings") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(-3.0) == "-3");
  CHECK(format_double(0.1) == "0.1");
  const double v = 0.894937675578;
  CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("run records print as stable comma rows") {
  std::vector<RunRecord> recs(2);
  recs[0] = {1, 3, 0.25, 0.8125, -0.4375};
  recs[1] = {2, 0, 0.0, 0.5, -0.693147180559945};
  std::ostringstream os;
  write_run_csv(os, recs);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "communication,client_id,epsilon_spent,test_accuracy,test_avg_ll");
  std::getline(in, line);
  CHECK(line == "1,3,0.25,0.8125,-0.4375");
  std::getline(in, line);
  CHECK(line.rfind("2,0,0,0.5,", 0) == 0);
}

TEST_CASE("sweep rows leave infeasible cells blank") {
  std::vector<SweepCell> cells(2);
  cells[0] = {0.5, 0.25, true, 0.03125, -0.125};
  cells[1] = {0.9, 0.95, false, 0.0, 0.0};
  std::ostringstream os;
  write_sweep_csv(os, cells);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "kappa,rho,accuracy_diff,avg_ll_diff");
  std::getline(in, line);
  CHECK(line == "0.5,0.25,0.03125,-0.125");
  std::getline(in, line);
  CHECK(line == "0.9,0.95,,");
}

}  // TEST_SUITE
