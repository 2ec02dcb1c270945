#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace mdc {

// Reals in reports and CSV: '.' decimal separator, 12 significant digits.
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

struct VerificationRow {
  std::string check;
  long k = -1;  // pivot step, 1-based; -1 when not applicable
  long j = -1;  // coordinate / grid index, 1-based; -1 when not applicable
  double observed = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  bool pass = true;
  std::string witness;  // human-readable context for failures; not part of the CSV
};

/// Pass/fail records from exact and Monte Carlo checks.
class VerificationReport {
 public:
  void add(VerificationRow row) { rows_.push_back(std::move(row)); }
  void append(const VerificationReport& other) {
    rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end());
  }

  const std::vector<VerificationRow>& rows() const noexcept { return rows_; }
  bool empty() const noexcept { return rows_.empty(); }

  bool passed() const {
    return std::all_of(rows_.begin(), rows_.end(), [](const VerificationRow& r) { return r.pass; });
  }

  std::size_t failures() const {
    return static_cast<std::size_t>(
        std::count_if(rows_.begin(), rows_.end(), [](const VerificationRow& r) { return !r.pass; }));
  }

  // Smallest slack over all rows (+inf when empty).
  double worst_slack() const {
    double w = INFINITY;
    for (const auto& r : rows_) w = std::min(w, r.slack);
    return w;
  }

  void write_csv(std::ostream& os) const {
    os << "check,k,j,observed,bound,slack,pass\n";
    for (const auto& r : rows_) {
      os << csv_field(r.check) << ',' << (r.k < 0 ? std::string() : std::to_string(r.k)) << ','
         << (r.j < 0 ? std::string() : std::to_string(r.j)) << ',' << format_real(r.observed) << ','
         << format_real(r.bound) << ',' << format_real(r.slack) << ',' << (r.pass ? "true" : "false") << '\n';
    }
  }

 private:
  std::vector<VerificationRow> rows_;
};

}  // namespace mdc
