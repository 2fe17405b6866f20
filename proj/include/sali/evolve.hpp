#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "sali/build.hpp"
#include "sali/node.hpp"
#include "sali/prob.hpp"

namespace sali {

// One planned flat segment: a contiguous key range, its least-squares model
// with the slope scaled up to reserve gaps, and the slot budget that follows.
struct SegmentPlan {
  std::size_t first = 0;
  std::size_t count = 0;
  LinearModel model;
  std::uint32_t num_slots = 0;
  Key max_key = 0;
};

struct FlattenPlan {
  std::vector<SegmentPlan> segments;
};

namespace detail {

// Least squares over (key, local index 0..m-1).
inline LinearModel least_squares(std::span<const Key> keys) {
  LinearModel m;
  const std::size_t n = keys.size();
  if (n == 1) return m;
  long double kbar = 0.0L;
  for (Key k : keys) kbar += static_cast<long double>(k);
  kbar /= n;
  const long double ibar = static_cast<long double>(n - 1) / 2;
  long double num = 0.0L, den = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const long double dk = static_cast<long double>(keys[i]) - kbar;
    num += dk * (static_cast<long double>(i) - ibar);
    den += dk * dk;
  }
  if (den <= 0.0L) return m;
  m.slope = num / den;
  m.intercept = ibar - m.slope * kbar;
  return m;
}

}  // namespace detail

// Splits sorted keys at the (segments - 1) largest adjacent gaps, fits each
// side by least squares, and scales every segment's slope by
// expand_size / segment_key_count so the stored CDF straightens out over
// reserved gaps. Ties between equal gaps break to the leftmost.
inline FlattenPlan plan_flatten(std::span<const Key> keys, std::uint32_t segments,
                                std::uint64_t expand_size) {
  FlattenPlan plan;
  const std::size_t n = keys.size();
  SALI_ASSERT(n >= 1);
  segments = static_cast<std::uint32_t>(std::min<std::size_t>(segments, n));

  // boundaries[i] = index starting segment i+1
  std::vector<std::size_t> boundaries;
  if (segments > 1) {
    std::vector<std::size_t> order(n - 1);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + (segments - 1), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const Key ga = keys[a + 1] - keys[a];
                        const Key gb = keys[b + 1] - keys[b];
                        return ga != gb ? ga > gb : a < b;
                      });
    boundaries.assign(order.begin(), order.begin() + (segments - 1));
    for (auto& b : boundaries) ++b;
    std::sort(boundaries.begin(), boundaries.end());
  }
  boundaries.push_back(n);

  std::size_t first = 0;
  for (std::size_t b : boundaries) {
    SegmentPlan sp;
    sp.first = first;
    sp.count = b - first;
    const auto seg_keys = keys.subspan(first, sp.count);
    LinearModel ls = detail::least_squares(seg_keys);
    const long double multiple =
        static_cast<long double>(expand_size) / static_cast<long double>(sp.count);
    ls.slope *= multiple;
    // anchor the first key at slot zero
    ls.intercept = -ls.slope * static_cast<long double>(seg_keys.front());
    const long double top =
        ls.slope * static_cast<long double>(seg_keys.back()) + ls.intercept;
    std::uint64_t slots = top > 0.0L ? static_cast<std::uint64_t>(top) + 2 : kMinSlots;
    const std::uint64_t lo = std::max<std::uint64_t>(kMinSlots, sp.count);
    const std::uint64_t hi =
        std::max(lo, std::min(2 * expand_size, kMaxExpandSlots));
    slots = std::clamp<std::uint64_t>(slots, lo, hi);
    sp.model = ls;
    sp.num_slots = static_cast<std::uint32_t>(slots);
    sp.max_key = seg_keys.back();
    plan.segments.push_back(sp);
    first = b;
  }
  return plan;
}

// Materializes the flattened multi-segment node. Keys that still collide
// under the scaled models chain downward exactly like insertion conflicts.
inline Node* build_flattened_node(std::span<const Key> keys, std::span<const Value> values,
                                  const FlattenPlan& plan, std::uint32_t depth, Tick now,
                                  double speed, const EvolveConfig& cfg) {
  Node* node = new Node;
  node->meta.build_num = keys.size();
  node->meta.build_time = now;
  node->meta.speed = speed;
  node->meta.kind = plan.segments.size() > 1 ? NodeKind::HotLookup : NodeKind::Normal;
  node->meta.last_evolve_cause = EvolveCause::LookupEvolve;
  node->meta.depth_hint = depth;
  for (const SegmentPlan& sp : plan.segments) {
    node->segs.emplace_back(sp.model, sp.max_key, sp.num_slots);
    Segment& seg = node->segs.back();
    const auto seg_keys = keys.subspan(sp.first, sp.count);
    const auto seg_vals = values.subspan(sp.first, sp.count);
    std::size_t i = 0;
    while (i < sp.count) {
      const std::size_t slot = sp.model.predict(seg_keys[i], sp.num_slots);
      std::size_t j = i + 1;
      while (j < sp.count && sp.model.predict(seg_keys[j], sp.num_slots) == slot) ++j;
      if (j - i == 1) {
        seg.slots[slot].init_entry(seg_keys[i], seg_vals[i]);
      } else {
        BuildRequest child;
        child.keys = seg_keys.subspan(i, j - i);
        child.values = seg_vals.subspan(i, j - i);
        child.target_slots = default_build_slots(j - i);
        child.depth = depth + 1;
        child.now = now;
        child.root_speed = cfg.initial_speed;
        child.cause = EvolveCause::Build;
        seg.slots[slot].init_child(build_node(child, cfg));
      }
      i = j;
    }
  }
  return node;
}

}  // namespace sali
