#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "sali/config.hpp"
#include "sali/node.hpp"
#include "sali/prob.hpp"

namespace sali {

constexpr std::uint32_t kMinSlots = 4;
constexpr std::uint32_t kMaxBuildDepth = 128;

// Default slot budget for a fresh (non-evolve) build: small nodes get the
// largest gap factor, mirroring the expansion-factor tiers.
inline std::uint64_t default_build_slots(std::uint64_t n) {
  if (n <= 1) return kMinSlots;
  if (n == 2) return 8;
  std::uint64_t gaps = 5;
  if (n >= 1'000'000) gaps = 1;
  else if (n >= 100'000) gaps = 2;
  return std::max<std::uint64_t>(kMinSlots, n * (gaps + 1));
}

struct ConflictEval {
  std::uint64_t degree = 0;            // max keys mapped to one slot
  std::uint64_t conflicted_slots = 0;  // slots holding >= 2 keys
};

// Keys are sorted, so predictions are non-decreasing and conflicts show up as
// runs of equal predictions.
inline ConflictEval eval_model(const LinearModel& m, std::span<const Key> keys,
                               std::size_t num_slots) {
  ConflictEval e;
  std::size_t run = 0;
  std::size_t prev = 0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const std::size_t p = m.predict(keys[i], num_slots);
    if (i && p == prev) {
      ++run;
    } else {
      if (run >= 2) ++e.conflicted_slots;
      e.degree = std::max<std::uint64_t>(e.degree, run);
      run = 1;
    }
    prev = p;
  }
  if (run >= 2) ++e.conflicted_slots;
  e.degree = std::max<std::uint64_t>(e.degree, run);
  return e;
}

namespace detail {

inline LinearModel interpolate(Key k1, long double p1, Key k2, long double p2) {
  LinearModel m;
  if (k2 <= k1) return m;
  m.slope = (p2 - p1) / (static_cast<long double>(k2) - static_cast<long double>(k1));
  m.intercept = p1 - m.slope * static_cast<long double>(k1);
  return m;
}

// The minimum-conflict-degree scan: grow the tolerated degree D until every
// window of D keys spans at least one slot unit, then center the resulting
// line. Falls back to a one-third/two-thirds interpolation when the data is
// too clustered for the scan.
inline bool fmcd_candidate(std::span<const Key> keys, std::size_t target_slots,
                           LinearModel& out) {
  const std::size_t n = keys.size();
  if (n < 4 || target_slots < 4) return false;
  const long double L = static_cast<long double>(target_slots);
  std::size_t i = 0;
  std::size_t d = 1;
  long double ut = (static_cast<long double>(keys[n - 1 - d]) -
                    static_cast<long double>(keys[d])) /
                       (L - 2) +
                   1e-6L;
  while (i < n - 1 - d) {
    while (i + d < n && static_cast<long double>(keys[i + d] - keys[i]) >= ut) ++i;
    if (i + d >= n) break;
    ++d;
    if (d * 3 > n) break;
    ut = (static_cast<long double>(keys[n - 1 - d]) -
          static_cast<long double>(keys[d])) /
             (L - 2) +
         1e-6L;
  }
  if (d * 3 > n || ut <= 0.0L) {
    const std::size_t m1 = (n - 1) / 3, m2 = (n - 1) * 2 / 3;
    if (keys[m2] <= keys[m1]) return false;
    out = interpolate(keys[m1], L / 3, keys[m2], 2 * L / 3);
    return out.slope > 0.0L;
  }
  out.slope = 1.0L / ut;
  out.intercept = (L - out.slope * (static_cast<long double>(keys[n - 1 - d]) +
                                    static_cast<long double>(keys[d]))) /
                  2;
  return true;
}

}  // namespace detail

// Picks the slot-placement model for a sorted key run: evaluate a fixed
// candidate set (endpoint interpolation, the minimum-conflict-degree scan,
// and two quantile-pair interpolations) and keep the one with the lowest
// conflict degree; ties fall to fewer conflicted slots, then smaller slope.
inline LinearModel choose_model(std::span<const Key> keys, std::size_t target_slots) {
  SALI_ASSERT(!keys.empty() && target_slots >= 1);
  const std::size_t n = keys.size();
  LinearModel endpoint;
  if (n == 1 || keys.back() == keys.front()) {
    endpoint.slope = 0.0L;
    endpoint.intercept = static_cast<long double>(target_slots) / 2;
    return endpoint;
  }
  endpoint = detail::interpolate(keys.front(), 0.0L, keys.back(),
                                 static_cast<long double>(target_slots - 1));

  std::vector<LinearModel> candidates{endpoint};
  LinearModel fmcd;
  if (detail::fmcd_candidate(keys, target_slots, fmcd)) candidates.push_back(fmcd);
  const long double s = static_cast<long double>(target_slots);
  if (keys[n * 3 / 4] > keys[n / 4])
    candidates.push_back(
        detail::interpolate(keys[n / 4], s / 4, keys[n * 3 / 4], 3 * s / 4));
  if (keys[n * 9 / 10] > keys[n / 10])
    candidates.push_back(
        detail::interpolate(keys[n / 10], s / 10, keys[n * 9 / 10], 9 * s / 10));

  LinearModel best = endpoint;
  ConflictEval best_eval = eval_model(endpoint, keys, target_slots);
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    const LinearModel& m = candidates[c];
    if (!(m.slope >= 0.0L) || !std::isfinite(static_cast<double>(m.slope)) ||
        !std::isfinite(static_cast<double>(m.intercept)))
      continue;
    const ConflictEval e = eval_model(m, keys, target_slots);
    const bool better = e.degree < best_eval.degree ||
                        (e.degree == best_eval.degree &&
                         (e.conflicted_slots < best_eval.conflicted_slots ||
                          (e.conflicted_slots == best_eval.conflicted_slots &&
                           m.slope < best.slope)));
    if (better) {
      best = m;
      best_eval = e;
    }
  }
  return best;
}

struct BuildRequest {
  std::span<const Key> keys;      // strictly increasing
  std::span<const Value> values;  // parallel to keys
  std::uint64_t target_slots = 0;
  std::uint32_t depth = 1;
  Tick now = 0;
  double root_speed = 0.0;        // meta.speed for the subtree root
  EvolveCause cause = EvolveCause::Build;
};

namespace detail {

inline Node* build_rec(std::span<const Key> keys, std::span<const Value> values,
                       std::uint64_t target_slots, std::uint32_t depth, Tick now,
                       double speed, EvolveCause cause, const EvolveConfig& cfg) {
  SALI_ASSERT(depth <= kMaxBuildDepth);
  const std::size_t n = keys.size();
  target_slots = std::max<std::uint64_t>(target_slots, std::max<std::uint64_t>(kMinSlots, n));

  Node* node = new Node;
  node->meta.build_num = n;
  node->meta.build_time = now;
  node->meta.speed = speed;
  node->meta.kind = NodeKind::Normal;
  node->meta.last_evolve_cause = cause;
  node->meta.depth_hint = depth;

  const LinearModel model = choose_model(keys, target_slots);
  node->segs.emplace_back(model, keys.back(), static_cast<std::uint32_t>(target_slots));
  Segment& seg = node->segs.back();

  std::size_t i = 0;
  while (i < n) {
    const std::size_t slot = model.predict(keys[i], target_slots);
    std::size_t j = i + 1;
    while (j < n && model.predict(keys[j], target_slots) == slot) ++j;
    SALI_ASSERT(j - i < n || n == 1);  // a full collapse cannot beat endpoint interpolation
    if (j - i == 1) {
      seg.slots[slot].init_entry(keys[i], values[i]);
    } else {
      Node* child = build_rec(keys.subspan(i, j - i), values.subspan(i, j - i),
                              default_build_slots(j - i), depth + 1, now,
                              cfg.initial_speed, EvolveCause::Build, cfg);
      seg.slots[slot].init_child(child);
    }
    i = j;
  }
  return node;
}

}  // namespace detail

// Builds a node (and recursively its conflict children) from a sorted run.
// Singleton predictions become entries in place; conflicting groups recurse
// into chain children, so placement is exact at every level.
inline Node* build_node(const BuildRequest& req, const EvolveConfig& cfg) {
  if (req.keys.empty()) throw std::invalid_argument("build_node: empty input");
  SALI_ASSERT(req.keys.size() == req.values.size());
  return detail::build_rec(req.keys, req.values, req.target_slots, req.depth, req.now,
                           req.root_speed, req.cause, cfg);
}

// Root of an empty index: four gap slots behind an identity model.
inline Node* build_empty_root(Tick now, const EvolveConfig& cfg) {
  Node* node = new Node;
  node->meta.build_num = 1;
  node->meta.build_time = now;
  node->meta.speed = cfg.initial_speed;
  node->meta.depth_hint = 1;
  LinearModel identity;
  identity.slope = 1.0L;
  identity.intercept = 0.0L;
  node->segs.emplace_back(identity, 0, kMinSlots);
  return node;
}

}  // namespace sali
