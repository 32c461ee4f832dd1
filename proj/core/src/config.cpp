#include "fedbayes/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fedbayes {

namespace {

using nlohmann::json;

json minibatch_to_json(const MinibatchSpec& mb) {
  return json{{"kind", mb.kind == MinibatchKind::fixed ? "fixed" : "poisson"},
              {"fixed_size", mb.fixed_size},
              {"poisson_rate", mb.poisson_rate}};
}

MinibatchSpec minibatch_from_json(const json& j) {
  MinibatchSpec mb;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "fixed")
    mb.kind = MinibatchKind::fixed;
  else if (kind == "poisson")
    mb.kind = MinibatchKind::poisson;
  else
    throw std::invalid_argument("unknown minibatch kind '" + kind + "'");
  mb.fixed_size = j.at("fixed_size").get<std::size_t>();
  mb.poisson_rate = j.at("poisson_rate").get<double>();
  return mb;
}

}  // namespace

RunConfig engine_defaults(Engine e) {
  RunConfig cfg;
  cfg.engine = e;
  cfg.prior_variance = 1.0;
  switch (e) {
    case Engine::pvi:
      cfg.max_communications = 5000;
      cfg.local.n_steps = 25;
      cfg.local.learning_rate = 2.0;
      cfg.local.damping = 0.1;
      cfg.local.minibatch = {MinibatchKind::fixed, 100, 1.0};
      break;
    case Engine::dp_pvi:
      cfg.max_communications = 5000;
      cfg.local.n_steps = 25;
      cfg.local.learning_rate = 0.5;
      cfg.local.damping = 0.1;
      cfg.local.minibatch = {MinibatchKind::poisson, 100, 0.02};
      cfg.privacy.clip_c = 75.0;
      cfg.privacy.noise_scale = 5.0;
      cfg.privacy.sample_rate = 0.02;
      cfg.privacy.delta = 1e-4;
      cfg.privacy.epsilon_max = 1.0;
      break;
    case Engine::global_vi:
      cfg.max_communications = 50000;
      cfg.local.n_steps = 1;
      cfg.local.learning_rate = 0.05;
      cfg.local.damping = 1.0;
      cfg.local.minibatch = {MinibatchKind::fixed, 100, 1.0};
      break;
  }
  return cfg;
}

Engine engine_from_name(const std::string& name) {
  if (name == "global_vi") return Engine::global_vi;
  if (name == "pvi") return Engine::pvi;
  if (name == "dp_pvi") return Engine::dp_pvi;
  throw std::invalid_argument("unknown engine '" + name + "'");
}

std::string engine_name(Engine e) {
  switch (e) {
    case Engine::global_vi: return "global_vi";
    case Engine::pvi: return "pvi";
    case Engine::dp_pvi: return "dp_pvi";
  }
  throw std::logic_error("unreachable");
}

void apply_distribution(PartitionSpec& spec, const std::string& name) {
  if (name == "A") {
    spec.rho = 0.0;
    spec.kappa = 0.0;
  } else if (name == "B") {
    spec.rho = 0.9;
    spec.kappa = 0.95;
  } else if (name == "C") {
    spec.rho = 0.7;
    spec.kappa = -3.0;
  } else if (name == "D") {
    spec.rho = 0.6;
    spec.kappa = -1.5;
  } else {
    throw std::invalid_argument("unknown distribution '" + name + "' (expected A, B, C or D)");
  }
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json j;
  j["dataset_path"] = cfg.dataset_path;
  j["distribution"] = cfg.distribution;
  j["out_dir"] = cfg.out_dir;
  j["seeds"] = cfg.seeds;
  j["train_fraction"] = cfg.train_fraction;
  j["split_seed"] = cfg.split_seed;
  j["partition_seed"] = cfg.partition_seed;
  j["partition"] = json{{"m_clients", cfg.partition.m_clients},
                        {"rho", cfg.partition.rho},
                        {"kappa", cfg.partition.kappa},
                        {"n_total_override", cfg.partition.n_total_override}};
  j["run"] = json{{"engine", engine_name(cfg.run.engine)},
                  {"max_communications", cfg.run.max_communications},
                  {"eval_every", cfg.run.eval_every},
                  {"prior_variance", cfg.run.prior_variance},
                  {"local",
                   json{{"n_steps", cfg.run.local.n_steps},
                        {"learning_rate", cfg.run.local.learning_rate},
                        {"damping", cfg.run.local.damping},
                        {"minibatch", minibatch_to_json(cfg.run.local.minibatch)},
                        {"mc_samples", cfg.run.local.mc_samples},
                        {"adagrad_epsilon", cfg.run.local.adagrad_epsilon}}},
                  {"privacy",
                   json{{"clip_c", cfg.run.privacy.clip_c},
                        {"noise_scale", cfg.run.privacy.noise_scale},
                        {"sample_rate", cfg.run.privacy.sample_rate},
                        {"delta", cfg.run.privacy.delta},
                        {"epsilon_max", cfg.run.privacy.epsilon_max}}}};
  return j.dump(2);
}

ExperimentConfig parse_config(const std::string& json_text) {
  const json j = json::parse(json_text);
  ExperimentConfig cfg;
  cfg.dataset_path = j.at("dataset_path").get<std::string>();
  cfg.distribution = j.at("distribution").get<std::string>();
  cfg.out_dir = j.at("out_dir").get<std::string>();
  cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  cfg.train_fraction = j.at("train_fraction").get<double>();
  cfg.split_seed = j.at("split_seed").get<std::uint64_t>();
  cfg.partition_seed = j.at("partition_seed").get<std::uint64_t>();

  const json& p = j.at("partition");
  cfg.partition.m_clients = p.at("m_clients").get<std::size_t>();
  cfg.partition.rho = p.at("rho").get<double>();
  cfg.partition.kappa = p.at("kappa").get<double>();
  cfg.partition.n_total_override = p.at("n_total_override").get<std::size_t>();
  if (!cfg.distribution.empty()) apply_distribution(cfg.partition, cfg.distribution);

  const json& r = j.at("run");
  cfg.run.engine = engine_from_name(r.at("engine").get<std::string>());
  cfg.run.max_communications = r.at("max_communications").get<std::size_t>();
  cfg.run.eval_every = r.at("eval_every").get<std::size_t>();
  cfg.run.prior_variance = r.at("prior_variance").get<double>();

  const json& l = r.at("local");
  cfg.run.local.n_steps = l.at("n_steps").get<std::size_t>();
  cfg.run.local.learning_rate = l.at("learning_rate").get<double>();
  cfg.run.local.damping = l.at("damping").get<double>();
  cfg.run.local.minibatch = minibatch_from_json(l.at("minibatch"));
  cfg.run.local.mc_samples = l.at("mc_samples").get<std::size_t>();
  cfg.run.local.adagrad_epsilon = l.at("adagrad_epsilon").get<double>();

  const json& v = r.at("privacy");
  cfg.run.privacy.clip_c = v.at("clip_c").get<double>();
  cfg.run.privacy.noise_scale = v.at("noise_scale").get<double>();
  cfg.run.privacy.sample_rate = v.at("sample_rate").get<double>();
  cfg.run.privacy.delta = v.at("delta").get<double>();
  cfg.run.privacy.epsilon_max = v.at("epsilon_max").get<double>();
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void save_config_file(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << serialize_config(cfg) << '\n';
}

std::string manifest_json(const Partition& part) {
  json shards = json::array();
  for (std::size_t m = 0; m < part.shards.size(); ++m) {
    const ShardInfo& s = part.shards[m];
    shards.push_back(json{{"client", m},
                          {"size", s.size},
                          {"positive_fraction", s.positive_fraction},
                          {"delta", s.delta},
                          {"small_half", s.small_half},
                          {"indices", s.indices}});
  }
  json j{{"lambda_major", part.lambda_major}, {"shards", std::move(shards)}};
  return j.dump(2);
}

}  // namespace fedbayes
