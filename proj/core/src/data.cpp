#include "fedbayes/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fedbayes/errors.hpp"
#include "fedbayes/privacy.hpp"

namespace fedbayes {

namespace {

constexpr std::array<std::size_t, 6> kContinuousCols = {0, 2, 4, 10, 11, 12};
constexpr std::array<std::size_t, 8> kCategoricalCols = {1, 3, 5, 6, 7, 8, 9, 13};
constexpr std::size_t kColumns = 15;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw parse_error("expected a number, got '" + field + "'", line);
  return v;
}

}  // namespace

std::vector<AdultRecord> parse_adult_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<AdultRecord> out;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> fields;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '|') continue;

    fields.clear();
    std::stringstream ss(stripped);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!stripped.empty() && stripped.back() == ',') fields.push_back("");
    if (fields.size() != kColumns)
      throw parse_error("expected " + std::to_string(kColumns) + " fields, got " +
                            std::to_string(fields.size()),
                        line_no);

    if (std::any_of(fields.begin(), fields.end(),
                    [](const std::string& f) { return f == "?"; }))
      continue;

    AdultRecord r;
    for (std::size_t i = 0; i < kContinuousCols.size(); ++i)
      r.continuous[i] = parse_number(fields[kContinuousCols[i]], line_no);
    for (std::size_t i = 0; i < kCategoricalCols.size(); ++i)
      r.categorical[i] = fields[kCategoricalCols[i]];

    std::string label = fields[kColumns - 1];
    if (!label.empty() && label.back() == '.') label.pop_back();
    if (label == ">50K")
      r.label = 1;
    else if (label == "<=50K")
      r.label = -1;
    else
      throw parse_error("unrecognised label '" + label + "'", line_no);
    out.push_back(std::move(r));
  }
  return out;
}

Encoder Encoder::fit(std::span<const AdultRecord> train) {
  if (train.empty()) throw std::invalid_argument("cannot fit an encoder on no records");
  Encoder enc;
  const double n = static_cast<double>(train.size());
  for (std::size_t c = 0; c < 6; ++c) {
    double mean = 0.0;
    for (const auto& r : train) mean += r.continuous[c];
    mean /= n;
    double var = 0.0;
    for (const auto& r : train) {
      const double d = r.continuous[c] - mean;
      var += d * d;
    }
    var /= n;
    enc.mean_[c] = mean;
    // Constant columns encode to zero rather than dividing by zero.
    enc.stdev_[c] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  for (std::size_t c = 0; c < 8; ++c) {
    std::set<std::string> vals;
    for (const auto& r : train) vals.insert(r.categorical[c]);
    enc.vocab_[c].assign(vals.begin(), vals.end());
  }
  enc.dim_ = 6 + 1;
  for (const auto& v : enc.vocab_) enc.dim_ += v.size();
  return enc;
}

Example Encoder::encode(const AdultRecord& r) const {
  Example e;
  e.features.reserve(dim_);
  for (std::size_t c = 0; c < 6; ++c)
    e.features.push_back((r.continuous[c] - mean_[c]) / stdev_[c]);
  for (std::size_t c = 0; c < 8; ++c) {
    const auto& vocab = vocab_[c];
    std::vector<double> block(vocab.size(), 0.0);
    const auto it = std::lower_bound(vocab.begin(), vocab.end(), r.categorical[c]);
    if (it != vocab.end() && *it == r.categorical[c])
      block[static_cast<std::size_t>(it - vocab.begin())] = 1.0;
    e.features.insert(e.features.end(), block.begin(), block.end());
  }
  e.features.push_back(1.0);
  e.label = r.label;
  return e;
}

std::vector<Example> Encoder::apply(std::span<const AdultRecord> records) const {
  std::vector<Example> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(encode(r));
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            double fraction,
                                                                            std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0) throw std::invalid_argument("fraction must be in [0, 1]");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Generator rng(seed);
  rng.shuffle(idx);
  const auto n_first =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
  std::vector<std::size_t> first(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_first));
  std::vector<std::size_t> second(idx.begin() + static_cast<std::ptrdiff_t>(n_first), idx.end());
  return {std::move(first), std::move(second)};
}

std::vector<Example> load_adult(const std::string& path) {
  const auto records = parse_adult_records(path);
  const Encoder enc = Encoder::fit(records);
  return enc.apply(records);
}

Dataset load_adult_split(const std::string& dir, double train_fraction, std::uint64_t seed) {
  namespace fs = std::filesystem;
  std::vector<AdultRecord> records;
  bool found = false;
  for (const char* name : {"adult.data", "adult.test"}) {
    const fs::path p = fs::path(dir) / name;
    if (!fs::exists(p)) continue;
    auto part = parse_adult_records(p.string());
    records.insert(records.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
    found = true;
  }
  if (!found)
    throw std::runtime_error("no adult.data or adult.test under " + dir);

  auto [train_records, test_records] = split_train_test(records, train_fraction, seed);
  const Encoder enc = Encoder::fit(train_records);
  Dataset ds;
  ds.train = enc.apply(train_records);
  ds.test = enc.apply(test_records);
  ds.dim = enc.dim();
  return ds;
}

Partition partition(std::span<const Example> train, const PartitionSpec& spec, Generator& rng) {
  if (spec.m_clients < 2 || spec.m_clients % 2 != 0)
    throw std::invalid_argument("client count must be even and at least 2");
  if (spec.rho < 0.0 || spec.rho >= 1.0) throw std::invalid_argument("rho must be in [0, 1)");
  if (train.empty()) throw std::invalid_argument("cannot partition an empty pool");

  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < train.size(); ++i)
    (train[i].label == 1 ? pos : neg).push_back(i);
  const bool neg_major = neg.size() >= pos.size();
  std::vector<std::size_t>& maj_pool = neg_major ? neg : pos;
  std::vector<std::size_t>& min_pool = neg_major ? pos : neg;
  const double lambda =
      static_cast<double>(maj_pool.size()) / static_cast<double>(train.size());

  const double n_base = static_cast<double>(
      spec.n_total_override != 0 ? spec.n_total_override : train.size());
  const double per_client = n_base / static_cast<double>(spec.m_clients);
  const auto n_small =
      static_cast<std::size_t>(std::floor(per_client * (1.0 - spec.rho) + 1e-9));
  const auto n_large =
      static_cast<std::size_t>(std::floor(per_client * (1.0 + spec.rho) + 1e-9));
  if (n_small == 0) throw infeasible_partition_error("small-client size is zero");

  const double lam_small = lambda + (1.0 - lambda) * spec.kappa;
  if (lam_small < 0.0 || lam_small > 1.0)
    throw infeasible_partition_error("target class fraction outside [0, 1]");

  const std::size_t half = spec.m_clients / 2;
  const auto maj_small = static_cast<std::size_t>(
      std::llround(lam_small * static_cast<double>(n_small)));
  if (maj_small > n_small)
    throw infeasible_partition_error("small-client majority target exceeds client size");

  const std::size_t n_used = half * (n_small + n_large);
  const auto maj_budget =
      static_cast<std::size_t>(std::llround(lambda * static_cast<double>(n_used)));
  if (maj_budget < half * maj_small)
    throw infeasible_partition_error("small clients consume more majority examples than the pool fraction allows");
  const std::size_t maj_large_total = maj_budget - half * maj_small;
  if (maj_large_total > half * n_large)
    throw infeasible_partition_error("large-client majority target exceeds client size");

  const std::size_t min_needed = n_used - maj_budget;
  if (maj_budget > maj_pool.size())
    throw infeasible_partition_error("not enough majority-class examples");
  if (min_needed > min_pool.size())
    throw infeasible_partition_error("not enough minority-class examples");

  rng.shuffle(maj_pool);
  rng.shuffle(min_pool);

  Partition part;
  part.lambda_major = lambda;
  part.shards.resize(spec.m_clients);
  std::size_t maj_cursor = 0, min_cursor = 0;
  const std::size_t maj_large_base = maj_large_total / half;
  const std::size_t maj_large_rem = maj_large_total % half;
  for (std::size_t m = 0; m < spec.m_clients; ++m) {
    const bool small_half = m < half;
    const std::size_t size = small_half ? n_small : n_large;
    std::size_t n_maj;
    if (small_half) {
      n_maj = maj_small;
    } else {
      const std::size_t large_index = m - half;
      n_maj = maj_large_base + (large_index < maj_large_rem ? 1 : 0);
    }
    const std::size_t n_min = size - n_maj;

    ShardInfo& shard = part.shards[m];
    shard.small_half = small_half;
    shard.size = size;
    shard.indices.reserve(size);
    for (std::size_t i = 0; i < n_maj; ++i) shard.indices.push_back(maj_pool[maj_cursor++]);
    for (std::size_t i = 0; i < n_min; ++i) shard.indices.push_back(min_pool[min_cursor++]);

    std::size_t positives = 0;
    for (auto idx : shard.indices) positives += train[idx].label == 1 ? 1 : 0;
    shard.positive_fraction = static_cast<double>(positives) / static_cast<double>(size);
    shard.delta = delta_for_client(size);
  }
  return part;
}

std::vector<std::vector<Example>> materialize_shards(std::span<const Example> train,
                                                     const Partition& part) {
  std::vector<std::vector<Example>> shards;
  shards.reserve(part.shards.size());
  for (const auto& info : part.shards) {
    std::vector<Example> shard;
    shard.reserve(info.indices.size());
    for (auto idx : info.indices) shard.push_back(train[idx]);
    shards.push_back(std::move(shard));
  }
  return shards;
}

std::vector<Example> synthetic_logistic(std::size_t d, std::size_t n,
                                        std::span<const double> true_w, Generator& rng) {
  if (true_w.size() != d) throw dimension_mismatch_error("weight length must equal d");
  std::vector<Example> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Example e;
    e.features = rng.normal_vector(d);
    double z = 0.0;
    for (std::size_t j = 0; j < d; ++j) z += true_w[j] * e.features[j];
    e.label = rng.uniform() < sigmoid(z) ? 1 : -1;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace fedbayes
