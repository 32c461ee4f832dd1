#include "fedbayes/csv.hpp"

#include <charconv>
#include <system_error>

namespace fedbayes {

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

void write_run_csv(std::ostream& os, std::span<const RunRecord> records) {
  os << "communication,client_id,epsilon_spent,test_accuracy,test_avg_ll\n";
  for (const auto& r : records) {
    os << r.communication << ',' << r.client_id << ',' << format_double(r.epsilon_spent) << ','
       << format_double(r.test_accuracy) << ',' << format_double(r.test_avg_ll) << '\n';
  }
}

void write_sweep_csv(std::ostream& os, std::span<const SweepCell> cells) {
  os << "kappa,rho,accuracy_diff,avg_ll_diff\n";
  for (const auto& c : cells) {
    os << format_double(c.kappa) << ',' << format_double(c.rho) << ',';
    if (c.valid)
      os << format_double(c.acc_diff) << ',' << format_double(c.ll_diff);
    else
      os << ',';
    os << '\n';
  }
}

}  // namespace fedbayes
