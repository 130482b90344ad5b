#pragma once

// Plain-text run configuration: one `key = value` per line, `#` starts a comment.
// Numbers accept `2^-k`, `p/q` and ordinary decimals; lists are comma separated.
//
//   theta = 2
//   s = 2.501
//   levels = 2^-2, 2^-3, 2^-4, 2^-5
//   ref_level = 2^-8
//   fixed_k = 2^-6

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "stochtrig/analysis.hpp"
#include "stochtrig/error.hpp"
#include "stochtrig/schemes.hpp"

namespace stochtrig::config {

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "theta", "s", "levels", "ref_level", "fixed_h", "fixed_k", "n_samples", "seed", "J", "T",
      "problem", "correlated_noise", "operator_ordering", "reference", "noise_scale", "snapshots"};
  return keys;
}

/// Raw key/value pairs; a repeated key keeps its last value.
using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string_view v) {
  const auto first = v.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = v.find_last_not_of(" \t\r");
  return std::string(v.substr(first, last - first + 1));
}

inline void fail(const std::string& msg) { throw DomainError("config: " + msg); }

inline double parse_plain(const std::string& text, const std::string& key) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) fail("key '" + key + "': cannot parse number '" + text + "'");
  return v;
}

}  // namespace detail

/// `2^-5`, `1/32`, `0.03125`.
inline double parse_number(const std::string& raw, const std::string& key = "value") {
  const std::string text = detail::trim(raw);
  if (text.empty()) detail::fail("key '" + key + "': empty number");
  if (const auto caret = text.find('^'); caret != std::string::npos) {
    const double base = detail::parse_plain(detail::trim(text.substr(0, caret)), key);
    const double exponent = detail::parse_plain(detail::trim(text.substr(caret + 1)), key);
    return std::pow(base, exponent);
  }
  if (const auto slash = text.find('/'); slash != std::string::npos) {
    const double num = detail::parse_plain(detail::trim(text.substr(0, slash)), key);
    const double den = detail::parse_plain(detail::trim(text.substr(slash + 1)), key);
    if (den == 0.0) detail::fail("key '" + key + "': division by zero");
    return num / den;
  }
  return detail::parse_plain(text, key);
}

inline std::vector<double> parse_list(const std::string& raw, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item, key));
  if (out.empty()) detail::fail("key '" + key + "': empty list");
  return out;
}

inline long long parse_integer(const std::string& raw, const std::string& key) {
  const std::string text = detail::trim(raw);
  long long v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) detail::fail("key '" + key + "': expected an integer, got '" + text + "'");
  return v;
}

inline std::uint64_t parse_seed(const std::string& raw) {
  const std::string text = detail::trim(raw);
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) detail::fail("key 'seed': expected an unsigned 64-bit integer, got '" + text + "'");
  return v;
}

inline bool parse_bool(const std::string& raw, const std::string& key) {
  std::string text = detail::trim(raw);
  std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return std::tolower(c); });
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  detail::fail("key '" + key + "': expected true/false, got '" + text + "'");
  return false;
}

/// Adds one `key = value` assignment (later assignments win).
inline void assign(ConfigMap& map, std::string_view line, const std::string& where = "") {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) detail::fail(where + "expected 'key = value', got '" + detail::trim(line) + "'");
  const std::string key = detail::trim(line.substr(0, eq));
  const std::string value = detail::trim(line.substr(eq + 1));
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) detail::fail(where + "unknown key '" + key + "'");
  if (value.empty()) detail::fail(where + "key '" + key + "' has no value");
  map[key] = value;
}

inline ConfigMap parse_text(std::string_view text) {
  ConfigMap map;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    assign(map, line, "line " + std::to_string(number) + ": ");
  }
  return map;
}

inline ConfigMap load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) detail::fail("cannot read '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str());
}

namespace detail {

inline const std::string& need(const ConfigMap& map, const std::string& key) {
  const auto it = map.find(key);
  if (it == map.end()) fail("missing key '" + key + "'");
  return it->second;
}

inline bool semilinear_problem(const ConfigMap& map) {
  const auto it = map.find("problem");
  if (it == map.end() || it->second == "semilinear") return true;
  if (it->second == "linear") return false;
  fail("key 'problem': expected linear or semilinear, got '" + it->second + "'");
  return true;
}

inline schemes::OperatorOrdering ordering(const ConfigMap& map) {
  const auto it = map.find("operator_ordering");
  if (it == map.end() || it->second == "project_then_multiply") return schemes::OperatorOrdering::project_then_multiply;
  if (it->second == "multiply_then_project") return schemes::OperatorOrdering::multiply_then_project;
  fail("key 'operator_ordering': expected project_then_multiply or multiply_then_project, got '" + it->second + "'");
  return schemes::OperatorOrdering::project_then_multiply;
}

inline int positive_int(const ConfigMap& map, const std::string& key) {
  const long long v = parse_integer(need(map, key), key);
  if (v < 1 || v > 1'000'000'000) fail(key + " must be a positive integer, got " + std::to_string(v));
  return static_cast<int>(v);
}

}  // namespace detail

/// Builds and validates an experiment; `fixed_k` (spatial) or `fixed_h` (temporal)
/// supplies the resolution that is not varied.
inline analysis::ExperimentConfig to_experiment(const ConfigMap& map, analysis::StudyKind kind) {
  analysis::ExperimentConfig c;
  c.kind = kind;
  c.semilinear = detail::semilinear_problem(map);
  c.theta = parse_number(detail::need(map, "theta"), "theta");
  c.s = parse_number(detail::need(map, "s"), "s");
  c.levels = parse_list(detail::need(map, "levels"), "levels");
  c.ref_level = parse_number(detail::need(map, "ref_level"), "ref_level");
  const std::string other = kind == analysis::StudyKind::spatial ? "fixed_k" : "fixed_h";
  c.fixed_other = parse_number(detail::need(map, other), other);
  const long long n_samples = parse_integer(detail::need(map, "n_samples"), "n_samples");
  if (n_samples > 1'000'000'000) detail::fail("n_samples too large");
  c.n_samples = static_cast<int>(std::max<long long>(n_samples, -1));
  c.seed = map.contains("seed") ? parse_seed(map.at("seed")) : 0;
  c.J = detail::positive_int(map, "J");
  c.T = map.contains("T") ? parse_number(map.at("T"), "T") : 1.0;
  c.correlated_noise = map.contains("correlated_noise") && parse_bool(map.at("correlated_noise"), "correlated_noise");
  c.ordering = detail::ordering(map);
  c.noise_amplitude = map.contains("noise_scale") ? parse_number(map.at("noise_scale"), "noise_scale") : 1.0;
  if (const auto it = map.find("reference"); it != map.end()) {
    if (it->second == "exact")
      c.reference = analysis::ReferenceKind::exact;
    else if (it->second != "numerical")
      detail::fail("key 'reference': expected numerical or exact, got '" + it->second + "'");
  }
  c.validate();
  return c;
}

struct SinglePathConfig {
  bool semilinear = true;
  double theta = 2.0;
  double s = 2.501;
  double h = 1.0 / 64;
  double k = 1.0 / 64;
  int J = 64;
  double T = 1.0;
  std::uint64_t seed = 0;
  bool correlated_noise = false;
  schemes::OperatorOrdering ordering = schemes::OperatorOrdering::project_then_multiply;
  double noise_amplitude = 1.0;
  std::vector<double> snapshots;  // times in [0, T], each a multiple of k

  void validate() const {
    const auto require = [](bool ok, const std::string& msg) { stochtrig::detail::require(ok, "config: " + msg); };
    require(s > theta + 0.5, "finiteness criterion violated: need theta < s - 1/2 (d = 1), got theta = " +
                                 std::to_string(theta) + ", s = " + std::to_string(s));
    require(analysis::is_dyadic(h) && h <= 0.5, "fixed_h must be a power of two <= 1/2");
    require(analysis::is_dyadic(k), "fixed_k must be a power of two <= 1");
    require(T > 0.0 && J >= 1, "T must be positive and J >= 1");
    require(noise_amplitude >= 0.0, "noise amplitude must be >= 0");
    require(!snapshots.empty(), "snapshots must list at least one time");
    const double steps = T / k;
    require(std::abs(steps - std::round(steps)) <= 1e-9 * steps, "T must be a multiple of fixed_k");
    for (double t : snapshots) {
      require(t >= 0.0 && t <= T * (1.0 + 1e-12), "snapshot time " + std::to_string(t) + " outside [0, T]");
      const double n = t / k;
      require(std::abs(n - std::round(n)) <= 1e-9 * std::max(1.0, n),
              "snapshot time " + std::to_string(t) + " is not a multiple of fixed_k");
    }
  }

  noise::NoiseSpec noise() const { return {s, J, correlated_noise, noise_amplitude}; }

  schemes::ModelProblem problem() const {
    schemes::ModelProblem p = semilinear ? schemes::semilinear_model(noise(), T) : schemes::linear_problem(noise(), T);
    p.ordering = ordering;
    return p;
  }
};

inline SinglePathConfig to_single_path(const ConfigMap& map) {
  SinglePathConfig c;
  c.semilinear = detail::semilinear_problem(map);
  c.theta = parse_number(detail::need(map, "theta"), "theta");
  c.s = parse_number(detail::need(map, "s"), "s");
  c.h = parse_number(detail::need(map, "fixed_h"), "fixed_h");
  c.k = parse_number(detail::need(map, "fixed_k"), "fixed_k");
  c.J = detail::positive_int(map, "J");
  c.T = map.contains("T") ? parse_number(map.at("T"), "T") : 1.0;
  c.seed = map.contains("seed") ? parse_seed(map.at("seed")) : 0;
  c.correlated_noise = map.contains("correlated_noise") && parse_bool(map.at("correlated_noise"), "correlated_noise");
  c.ordering = detail::ordering(map);
  c.noise_amplitude = map.contains("noise_scale") ? parse_number(map.at("noise_scale"), "noise_scale") : 1.0;
  c.snapshots = map.contains("snapshots") ? parse_list(map.at("snapshots"), "snapshots") : std::vector<double>{c.T};
  c.validate();
  return c;
}

/// One `key = value` line per entry, sorted by key.
inline std::string describe(const ConfigMap& map) {
  std::string out;
  for (const auto& [k, v] : map) out += k + " = " + v + "\n";
  return out;
}

}  // namespace stochtrig::config
