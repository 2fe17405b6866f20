#pragma once

#include <algorithm>
#include <cstdint>

#include "sali/clock.hpp"
#include "sali/config.hpp"
#include "sali/node.hpp"
#include "sali/rng.hpp"

namespace sali {

// Outcome of a trigger evaluation. evolve is true only when both constituent
// Bernoulli trials succeeded.
struct TriggerDecision {
  bool evolve = false;
  EvolveCause cause = EvolveCause::Build;
  double measured_speed = 0.0;
};

// Probability that a single conflict signals enough accumulated conflicts to
// justify evolving: 1 / (alpha * (beta - 1) * build_num), clamped to (0, 1].
// The geometric expectation 1/p then matches the conflict budget.
inline double p_conflict(std::uint64_t build_num, const EvolveConfig& cfg) {
  const double denom = cfg.alpha * (cfg.beta - 1.0) * static_cast<double>(build_num);
  const double p = 1.0 / denom;
  return std::min(p, 1.0);
}

// Cumulative-insertion probability: estimated new keys (speed * elapsed, plus
// the depth-scaled reconciling term so a zero speed never pins the node)
// against the insertion budget (beta - 1) * build_num. 1 means the condition
// is met deterministically.
inline double p_acc(const NodeMeta& meta, Tick now, const EvolveConfig& cfg) {
  const double elapsed = now >= meta.build_time
                             ? static_cast<double>(now - meta.build_time)
                             : 0.0;
  const double eps = static_cast<double>(meta.depth_hint) / cfg.epsilon_divisor;
  const double num = meta.speed * elapsed + eps;
  const double denom = (cfg.beta - 1.0) * static_cast<double>(meta.build_num);
  const double p = num / denom;
  return std::clamp(p, 0.0, 1.0);
}

// Insertion-rate estimate for the period since the last build: keys gained
// over ticks elapsed. Degenerate elapsed keeps the previous estimate.
inline double update_speed(const NodeMeta& meta, std::uint64_t current_num, Tick now) {
  if (now <= meta.build_time) return meta.speed;
  const double gained = current_num >= meta.build_num
                            ? static_cast<double>(current_num - meta.build_num)
                            : 0.0;
  return gained / static_cast<double>(now - meta.build_time);
}

// Called when an insert lands on an occupied slot of `node`'s subtree root.
// First trial: did conflicts accumulate past the tolerance? Only if that
// succeeds is the accumulation trial sampled.
inline TriggerDecision on_conflict(const Node& node, Tick now, SplitMix64& rng,
                                   const EvolveConfig& cfg) {
  TriggerDecision d;
  d.cause = EvolveCause::InsertEvolve;
  d.measured_speed = node.meta.speed;
  if (!rng.bernoulli(p_conflict(node.meta.build_num, cfg))) return d;
  if (!rng.bernoulli(p_acc(node.meta, now, cfg))) return d;
  d.evolve = true;
  return d;
}

// Per-lookup-thread sampling state.
struct ThreadLocalSampler {
  std::uint32_t skip_counter = 0;
};

// Hot-lookup probability for a node, with the repeat penalty applied when the
// node's last evolve was itself lookup-triggered.
inline double effective_p_hl(const Node& node, const EvolveConfig& cfg) {
  return node.meta.last_evolve_cause == EvolveCause::LookupEvolve ? cfg.p_hl * cfg.lambda
                                                                  : cfg.p_hl;
}

// One lookup's worth of hot-read sampling: bump the thread-local counter and,
// every lookup_sample_period lookups, run the P_hl-then-P_acc trial against
// the node the lookup descended into.
inline TriggerDecision sample_hot_lookup(ThreadLocalSampler& tls, const Node& node, Tick now,
                                         SplitMix64& rng, const EvolveConfig& cfg) {
  TriggerDecision d;
  d.cause = EvolveCause::LookupEvolve;
  d.measured_speed = node.meta.speed;
  if (++tls.skip_counter < cfg.lookup_sample_period) return d;
  tls.skip_counter = 0;
  if (!rng.bernoulli(effective_p_hl(node, cfg))) return d;
  if (!rng.bernoulli(p_acc(node.meta, now, cfg))) return d;
  d.evolve = true;
  return d;
}

// Expansion factor by node size.
inline double expansion_gamma(std::uint64_t build_num, const EvolveConfig& cfg) {
  if (build_num >= 1'000'000) return cfg.theta;
  if (build_num >= 100'000) return 2.0 * cfg.theta;
  return 5.0 * cfg.theta;
}

// A measured rate spike must not balloon a single rebuild; anything past this
// many slots is clamped.
constexpr std::uint64_t kMaxExpandSlots = std::uint64_t{1} << 22;

// Target slot count for an insert-triggered rebuild. A rising insertion rate
// (speed ratio >= 1) scales the expansion proportionally; a falling one keeps
// the plain gamma * build_num. With adaptive expansion disabled the ratio is
// pinned to 1.
inline std::uint64_t compute_expand_size(const NodeMeta& meta, double speed_prev,
                                         const EvolveConfig& cfg) {
  const double gamma = expansion_gamma(meta.build_num, cfg);
  double ratio = 1.0;
  if (cfg.adaptive_expansion && speed_prev > 0.0) ratio = meta.speed / speed_prev;
  const double base = gamma * static_cast<double>(meta.build_num);
  const double size = ratio >= 1.0 ? base * ratio : base;
  auto n = static_cast<std::uint64_t>(size);
  if (static_cast<double>(n) < size) ++n;  // round up
  n = std::max(n, meta.build_num + 1);
  return std::min(n, std::max(meta.build_num + 1, kMaxExpandSlots));
}

}  // namespace sali
