#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "rwre/rwre.h"

namespace cli {

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string num(std::int64_t v) { return std::to_string(v); }

struct Row {
  std::string quantity;
  std::string input;
  double value = 0.0;
  double std_error = 0.0;
  double error_budget = 0.0;
  std::int64_t n = 0;
  bool converged = true;
};

class Table {
 public:
  Table(std::string command, std::uint64_t seed) : command_(std::move(command)), seed_(seed) {}

  void add(Row r) { rows_.push_back(std::move(r)); }

  void exact(const std::string& quantity, const std::string& input, double value, bool converged = true) {
    add({quantity, input, value, 0.0, 0.0, 0, converged});
  }

  void series(const std::string& quantity, const std::string& input, const rwre_series& s) {
    add({quantity, input, s.value, 0.0, s.remainder_bound, s.terms_used, s.converged != 0});
  }

  void estimate(const std::string& quantity, const std::string& input, const rwre_estimate& e) {
    add({quantity, input, e.value, e.std_error, e.error_budget, e.n, true});
  }

  bool all_converged() const {
    for (const Row& r : rows_)
      if (!r.converged) return false;
    return true;
  }

  const std::vector<Row>& rows() const { return rows_; }

  void write_csv(std::ostream& os) const {
    os << "command,quantity,input,value,std_error,error_budget,n,seed,converged\n";
    for (const Row& r : rows_) {
      os << command_ << ',' << r.quantity << ',' << quote(r.input) << ',' << num(r.value) << ','
         << num(r.std_error) << ',' << num(r.error_budget) << ',' << r.n << ',' << seed_ << ','
         << (r.converged ? "true" : "false") << '\n';
    }
  }

 private:
  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + '"';
  }

  std::string command_;
  std::uint64_t seed_;
  std::vector<Row> rows_;
};

}  // namespace cli
