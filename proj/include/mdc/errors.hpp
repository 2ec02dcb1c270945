#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mdc {

// Contract violation by the caller (bad shapes, invalid probability vectors,
// malformed structure maps).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An exact enumeration would exceed its evaluation budget. Never silently
// downgraded to sampling.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(const std::string& what, std::uint64_t required, std::uint64_t budget)
      : std::runtime_error(what + ": requires " + std::to_string(required) +
                           " evaluations, budget is " + std::to_string(budget)),
        required_(required),
        budget_(budget) {}

  std::uint64_t required() const noexcept { return required_; }
  std::uint64_t budget() const noexcept { return budget_; }

 private:
  std::uint64_t required_;
  std::uint64_t budget_;
};

// Window kernel calibration could not hit its column-sum target.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kDefaultBudget = 100'000'000;

namespace detail {

inline std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > UINT64_MAX / a) return UINT64_MAX;
  return a * b;
}

inline std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  return (b > UINT64_MAX - a) ? UINT64_MAX : a + b;
}

inline std::uint64_t saturating_pow(std::uint64_t base, std::size_t exp) {
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) r = saturating_mul(r, base);
  return r;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ArgumentError(msg);
}

inline void check_budget(const std::string& what, std::uint64_t required,
                         std::uint64_t budget) {
  if (required > budget) throw BudgetError(what, required, budget);
}

}  // namespace detail
}  // namespace mdc
