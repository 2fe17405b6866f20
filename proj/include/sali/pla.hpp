#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sali/node.hpp"

namespace sali {

// One-pass greedy piecewise linear approximation over (key, index) with a
// hard placement-error bound. Each segment is anchored at its first point and
// maintains the feasible slope interval; a point that empties the interval
// starts the next segment. The interval is tightened by half a slot so the
// floor() in prediction can never push the error past epsilon.
inline std::vector<PlaSegment> build_pla(std::span<const Key> keys, std::uint32_t epsilon) {
  SALI_ASSERT(epsilon >= 1);
  std::vector<PlaSegment> segs;
  const std::size_t n = keys.size();
  std::size_t start = 0;
  while (start < n) {
    long double lo = 0.0L;
    long double hi = 1e300L;
    const Key k0 = keys[start];
    std::size_t end = start + 1;
    const long double slack = static_cast<long double>(epsilon) - 0.5L;
    for (; end < n; ++end) {
      const long double dx = static_cast<long double>(keys[end] - k0);
      const long double dy = static_cast<long double>(end - start);
      long double nlo = (dy - slack) / dx;
      const long double nhi = (dy + slack) / dx;
      if (nlo < 0.0L) nlo = 0.0L;
      if (nlo > lo) lo = nlo;
      if (nhi < hi) hi = nhi;
      if (lo > hi) break;
    }
    PlaSegment s;
    s.first_key = k0;
    s.slope = end - start > 1 ? static_cast<double>((lo + hi) / 2) : 0.0;
    s.offset = 0.5;  // centers the floor()
    s.base = start;
    s.count = end - start;
    segs.push_back(s);
    start = end;
  }
  return segs;
}

inline std::unique_ptr<PlaPayload> build_pla_payload(std::span<const Key> keys,
                                                     std::span<const Value> values,
                                                     std::uint32_t epsilon) {
  auto p = std::make_unique<PlaPayload>();
  p->epsilon = epsilon;
  p->segs = build_pla(keys, epsilon);
  p->keys.assign(keys.begin(), keys.end());
  p->values.assign(values.begin(), values.end());
  return p;
}

// Compressed form of a cold subtree: all entries packed gap-free behind the
// PLA segments.
inline Node* build_compressed_node(std::span<const Key> keys, std::span<const Value> values,
                                   std::uint32_t epsilon, std::uint32_t depth, Tick now,
                                   double speed) {
  SALI_ASSERT(!keys.empty());
  Node* node = new Node;
  node->meta.build_num = keys.size();
  node->meta.build_time = now;
  node->meta.speed = speed;
  node->meta.kind = NodeKind::Compressed;
  node->meta.last_evolve_cause = EvolveCause::Compress;
  node->meta.depth_hint = depth;
  node->pla = build_pla_payload(keys, values, epsilon);
  return node;
}

}  // namespace sali
