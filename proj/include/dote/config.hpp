#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "dote/errors.hpp"

namespace dote {

/// Hyperparameters shared by the CSC solvers and the joint trainer.
struct SolverConfig {
  double lambda = 0.05;  // l1 weight on feature maps
  double beta = 0.10;    // feature-map coupling weight
  double gamma = 0.15;   // ridge weight on the channel map
  double sigma = 1.0;    // ADMM penalty
  std::size_t num_filters = 16;
  std::size_t support = 5;
  std::size_t max_outer = 15;
  std::size_t max_inner = 50;
  double tol = 1e-4;
  std::uint64_t seed = 1;
  bool dual_enabled = true;

  void validate() const {
    auto fail = [](const std::string& m) { throw InvalidInput("config: " + m); };
    if (!(lambda >= 0) || !std::isfinite(lambda)) fail("lambda must be >= 0");
    if (!(beta >= 0) || !std::isfinite(beta)) fail("beta must be >= 0");
    if (!(gamma >= 0) || !std::isfinite(gamma)) fail("gamma must be >= 0");
    if (!(sigma > 0) || !std::isfinite(sigma)) fail("sigma must be > 0");
    if (num_filters < 1) fail("k must be >= 1");
    if (support < 1 || support % 2 == 0) fail("d must be odd and >= 1");
    if (max_outer < 1) fail("max_outer must be >= 1");
    if (max_inner < 1) fail("max_inner must be >= 1");
    if (!(tol >= 0) || !std::isfinite(tol)) fail("tol must be >= 0");
  }

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  if constexpr (std::is_floating_point_v<T>) {
    std::string s(text);
    char* end = nullptr;
    value = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
      throw InvalidInput("config: bad number for " + std::string(key) + ": '" +
                         s + "'");
  } else {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
      throw InvalidInput("config: bad integer for " + std::string(key) + ": '" +
                         std::string(text) + "'");
  }
  return value;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw InvalidInput("config: bad boolean for " + std::string(key));
}

}  // namespace detail

/// Applies one `key=value` assignment. Unknown keys are errors.
inline void apply_config_entry(SolverConfig& cfg, std::string_view key,
                               std::string_view value) {
  using detail::parse_number;
  if (key == "lambda") cfg.lambda = parse_number<double>(key, value);
  else if (key == "beta") cfg.beta = parse_number<double>(key, value);
  else if (key == "gamma") cfg.gamma = parse_number<double>(key, value);
  else if (key == "sigma") cfg.sigma = parse_number<double>(key, value);
  else if (key == "k") cfg.num_filters = parse_number<std::size_t>(key, value);
  else if (key == "d") cfg.support = parse_number<std::size_t>(key, value);
  else if (key == "max_outer") cfg.max_outer = parse_number<std::size_t>(key, value);
  else if (key == "max_inner") cfg.max_inner = parse_number<std::size_t>(key, value);
  else if (key == "tol") cfg.tol = parse_number<double>(key, value);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "dual_enabled") cfg.dual_enabled = detail::parse_bool(key, value);
  else throw InvalidInput("config: unknown key '" + std::string(key) + "'");
}

/// Parses a flat `key=value` file; blank lines and `#` comments are skipped.
/// Keys not present keep their defaults.
inline SolverConfig parse_config(std::istream& is) {
  SolverConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw InvalidInput("config: line " + std::to_string(lineno) +
                         " is not key=value");
    apply_config_entry(cfg, detail::trim(text.substr(0, eq)),
                       detail::trim(text.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

inline void write_config(std::ostream& os, const SolverConfig& cfg) {
  std::ostringstream ss;
  ss.precision(17);
  ss << "lambda=" << cfg.lambda << '\n'
     << "beta=" << cfg.beta << '\n'
     << "gamma=" << cfg.gamma << '\n'
     << "sigma=" << cfg.sigma << '\n'
     << "k=" << cfg.num_filters << '\n'
     << "d=" << cfg.support << '\n'
     << "max_outer=" << cfg.max_outer << '\n'
     << "max_inner=" << cfg.max_inner << '\n'
     << "tol=" << cfg.tol << '\n'
     << "seed=" << cfg.seed << '\n'
     << "dual_enabled=" << (cfg.dual_enabled ? "true" : "false") << '\n';
  os << ss.str();
}

}  // namespace dote
