#pragma once

#include <stdexcept>
#include <string>

namespace fedbayes {

// Moment parameters with non-positive variance.
struct invalid_moment_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Natural parameters with eta2 >= 0 where a density is required.
struct non_normalizable_error : std::domain_error {
  using std::domain_error::domain_error;
};

// q_old / t_m_old produced a factor that is not a distribution.
struct cavity_collapse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct dimension_mismatch_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A vector passed to the Gaussian mechanism exceeded the clipping bound.
struct contract_violation_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A (kappa, rho) combination the class pools cannot supply.
struct infeasible_partition_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct parse_error : std::runtime_error {
  parse_error(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_number(line) {}
  std::size_t line_number;
};

}  // namespace fedbayes
