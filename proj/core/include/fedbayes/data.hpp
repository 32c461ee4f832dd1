#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedbayes/model.hpp"
#include "fedbayes/rng.hpp"

namespace fedbayes {

/// One census row before encoding. Continuous fields in file order (age,
/// fnlwgt, education-num, capital-gain, capital-loss, hours-per-week);
/// categorical fields likewise (workclass, education, marital-status,
/// occupation, relationship, race, sex, native-country).
struct AdultRecord {
  std::array<double, 6> continuous{};
  std::array<std::string, 8> categorical{};
  int label = -1;
};

/// Parses one UCI income file. Rows containing a "?" field are dropped;
/// comment lines (leading '|') and blank lines are skipped; trailing periods
/// on labels are accepted. Malformed rows raise parse_error with the
/// 1-based line number.
std::vector<AdultRecord> parse_adult_records(const std::string& path);

/// Feature map fitted on training records only: z-scores for the continuous
/// fields, sorted one-hot vocabularies for the categorical fields, bias
/// coordinate appended. Categories unseen at fit time encode to an all-zero
/// block.
class Encoder {
 public:
  static Encoder fit(std::span<const AdultRecord> train);

  std::size_t dim() const { return dim_; }
  Example encode(const AdultRecord& r) const;
  std::vector<Example> apply(std::span<const AdultRecord> records) const;

 private:
  std::array<double, 6> mean_{};
  std::array<double, 6> stdev_{};
  std::array<std::vector<std::string>, 8> vocab_{};
  std::size_t dim_ = 0;
};

/// Seeded shuffle then split; the first ceil(fraction * n) indices form the
/// first part.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            double fraction,
                                                                            std::uint64_t seed);

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_train_test(const std::vector<T>& data,
                                                           double fraction, std::uint64_t seed) {
  auto [a, b] = split_indices(data.size(), fraction, seed);
  std::pair<std::vector<T>, std::vector<T>> out;
  out.first.reserve(a.size());
  out.second.reserve(b.size());
  for (auto i : a) out.first.push_back(data[i]);
  for (auto i : b) out.second.push_back(data[i]);
  return out;
}

/// Whole-file convenience: encode every row of one file with statistics
/// fitted on that same file.
std::vector<Example> load_adult(const std::string& path);

struct Dataset {
  std::vector<Example> train;
  std::vector<Example> test;
  std::size_t dim = 0;
};

/// Full ingestion pipeline: parse adult.data and adult.test under dir (either
/// may be absent, not both), merge, split on raw records, fit the encoder on
/// the training records, encode both sides.
Dataset load_adult_split(const std::string& dir, double train_fraction, std::uint64_t seed);

/// Inhomogeneity knobs. rho spreads client sizes, kappa tilts the small
/// clients' class balance. n_total_override, when nonzero, replaces the pool
/// size in the client-size formulas (the class pools still limit
/// feasibility).
struct PartitionSpec {
  std::size_t m_clients = 10;
  double rho = 0.0;
  double kappa = 0.0;
  std::size_t n_total_override = 0;
};

struct ShardInfo {
  std::vector<std::size_t> indices;
  std::size_t size = 0;
  double positive_fraction = 0.0;
  double delta = 0.0;
  bool small_half = false;
};

struct Partition {
  std::vector<ShardInfo> shards;
  double lambda_major = 0.0;
};

/// Deals class-stratified shards: half the clients hold
/// floor((N/M)(1-rho)) examples with majority-class fraction
/// lambda + (1-lambda)*kappa, the other half hold floor((N/M)(1+rho))
/// examples with the majority fraction that conserves the pool's overall
/// class balance. Throws infeasible_partition_error when a class pool cannot
/// cover its targets.
Partition partition(std::span<const Example> train, const PartitionSpec& spec, Generator& rng);

std::vector<std::vector<Example>> materialize_shards(std::span<const Example> train,
                                                     const Partition& part);

/// x ~ N(0, I_d), label +1 with probability sigmoid(true_w . x).
std::vector<Example> synthetic_logistic(std::size_t d, std::size_t n,
                                        std::span<const double> true_w, Generator& rng);

}  // namespace fedbayes
