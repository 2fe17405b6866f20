#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

namespace sali {

// How structural-degradation statistics are maintained. Probability is the
// default; SharedCounter and Sampling exist for the ablation comparison and
// deliberately pay per-node atomic increments. Off disables triggers entirely
// (baseline for overhead measurements).
enum class StatsMode : std::uint8_t { Probability, SharedCounter, Sampling, Off };

inline const char* to_string(StatsMode m) {
  switch (m) {
    case StatsMode::Probability: return "prob";
    case StatsMode::SharedCounter: return "counter";
    case StatsMode::Sampling: return "sampling";
    case StatsMode::Off: return "off";
  }
  return "?";
}

inline StatsMode stats_mode_from_string(const std::string& s) {
  if (s == "prob" || s == "probability") return StatsMode::Probability;
  if (s == "counter" || s == "shared-counter") return StatsMode::SharedCounter;
  if (s == "sampling" || s == "samp") return StatsMode::Sampling;
  if (s == "off" || s == "none") return StatsMode::Off;
  throw std::invalid_argument("unknown stats mode: " + s);
}

// Every tunable of the index in one place. Defaults follow the evaluation
// setup where one exists; p_hl, lambda and initial_speed have no published
// value and the defaults below are our own (all overridable via config file
// or CLI flags).
struct EvolveConfig {
  double alpha = 0.1;                 // conflict tolerance
  double beta = 2.0;                  // accumulation tolerance, > 1
  double theta = 1.0;                 // expansion base factor
  double lambda = 0.1;                // repeated read-evolve penalty, in (0,1)
  double p_hl = 0.05;                 // hot-lookup trigger probability, in (0,1]
  double epsilon_divisor = 1000.0;    // eps = depth / epsilon_divisor
  double cooling_probability = 0.10;  // chance a new node enters the cooling pool
  std::uint64_t max_evolve_keys = 1'000'000;  // subtrees at least this big never evolve
  std::uint64_t index_size_cap = std::numeric_limits<std::uint64_t>::max();  // bytes
  std::uint32_t pla_epsilon = 16;     // compressed-node placement error bound, >= 1
  double initial_speed = 0.0;         // speed assigned to a freshly built node
  std::uint32_t flatten_segments = 2; // segments hung under one slot by read evolving
  bool read_evolving_enabled = false;
  std::uint32_t lookup_sample_period = 10;  // lookups between hot-read Bernoulli draws
  bool adaptive_expansion = true;     // false pins the speed ratio to 1
  bool upsert_values = false;         // true overwrites the value of an existing key
  StatsMode stats_mode = StatsMode::Probability;
  std::uint64_t rng_seed = 42;

  void validate() const {
    if (!(alpha > 0)) throw std::invalid_argument("alpha must be > 0");
    if (!(beta > 1)) throw std::invalid_argument("beta must be > 1");
    if (!(theta > 0)) throw std::invalid_argument("theta must be > 0");
    if (!(lambda > 0 && lambda < 1)) throw std::invalid_argument("lambda must be in (0,1)");
    if (!(p_hl > 0 && p_hl <= 1)) throw std::invalid_argument("p_hl must be in (0,1]");
    if (!(epsilon_divisor > 0)) throw std::invalid_argument("epsilon_divisor must be > 0");
    if (!(cooling_probability >= 0 && cooling_probability <= 1))
      throw std::invalid_argument("cooling_probability must be in [0,1]");
    if (pla_epsilon < 1) throw std::invalid_argument("pla_epsilon must be >= 1");
    if (flatten_segments < 2) throw std::invalid_argument("flatten_segments must be >= 2");
    if (lookup_sample_period < 1) throw std::invalid_argument("lookup_sample_period must be >= 1");
  }
};

// Parses a "key = value" config file (# starts a comment). Keys use the CLI
// flag spelling; '-' and '_' are interchangeable. Unknown keys are an error.
EvolveConfig load_config_file(const std::string& path);
bool apply_config_kv(EvolveConfig& cfg, const std::string& key, const std::string& value);

inline bool apply_config_kv(EvolveConfig& cfg, const std::string& key_in, const std::string& value) {
  std::string key = key_in;
  for (auto& c : key)
    if (c == '_') c = '-';
  auto d = [&] { return std::stod(value); };
  auto u = [&] { return static_cast<std::uint64_t>(std::stoull(value)); };
  auto b = [&] {
    if (value == "on" || value == "true" || value == "1") return true;
    if (value == "off" || value == "false" || value == "0") return false;
    throw std::invalid_argument("bad flag value: " + value);
  };
  if (key == "alpha") cfg.alpha = d();
  else if (key == "beta") cfg.beta = d();
  else if (key == "theta") cfg.theta = d();
  else if (key == "lambda") cfg.lambda = d();
  else if (key == "p-hl") cfg.p_hl = d();
  else if (key == "epsilon-divisor") cfg.epsilon_divisor = d();
  else if (key == "cooling-prob") cfg.cooling_probability = d();
  else if (key == "max-evolve-keys") cfg.max_evolve_keys = u();
  else if (key == "size-cap-bytes") cfg.index_size_cap = u();
  else if (key == "pla-epsilon") cfg.pla_epsilon = static_cast<std::uint32_t>(u());
  else if (key == "initial-speed") cfg.initial_speed = d();
  else if (key == "flatten-segments") cfg.flatten_segments = static_cast<std::uint32_t>(u());
  else if (key == "read-evolving") cfg.read_evolving_enabled = b();
  else if (key == "lookup-sample-period") cfg.lookup_sample_period = static_cast<std::uint32_t>(u());
  else if (key == "adaptive-expansion") cfg.adaptive_expansion = b();
  else if (key == "upsert") cfg.upsert_values = b();
  else if (key == "stats-mode") cfg.stats_mode = stats_mode_from_string(value);
  else if (key == "seed") cfg.rng_seed = u();
  else return false;
  return true;
}

inline EvolveConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  EvolveConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const char* ws = " \t\r\n";
      auto b = s.find_first_not_of(ws);
      if (b == std::string::npos) return std::string();
      auto e = s.find_last_not_of(ws);
      return s.substr(b, e - b + 1);
    };
    std::string t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (!apply_config_kv(cfg, key, value))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

}  // namespace sali
