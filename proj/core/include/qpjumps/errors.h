#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qpj {

// Bad or inconsistent scenario configuration. `key()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// Malformed input file. `offset()` is the byte offset (binary) or line number (text).
class FormatError : public std::runtime_error {
 public:
  FormatError(std::uint64_t offset, const std::string& what)
      : std::runtime_error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

// Fitter gave up. Carries the best parameter vector found so far.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, std::vector<double> best_so_far = {}, double best_cost = 0.0)
      : std::runtime_error(what), best_(std::move(best_so_far)), best_cost_(best_cost) {}
  const std::vector<double>& best_so_far() const noexcept { return best_; }
  double best_cost() const noexcept { return best_cost_; }

 private:
  std::vector<double> best_;
  double best_cost_;
};

}  // namespace qpj
