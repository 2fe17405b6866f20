#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sali/node.hpp"

namespace sali {

struct Violation {
  const Node* node = nullptr;
  std::size_t segment = 0;
  std::size_t slot = 0;
  std::string what;
};

// Structural checks for a single node (test oracle; needs exclusive access).
//   - Normal/HotLookup: every entry sits exactly where its segment's model
//     predicts, and dispatch routes the key back to the segment holding it.
//   - Compressed: entries sorted, every placement error within epsilon.
// Returns one violation per offending slot/entry.
inline std::vector<Violation> validate_node(const Node& node) {
  std::vector<Violation> out;
  if (node.meta.kind == NodeKind::Compressed) {
    if (!node.pla) {
      out.push_back({&node, 0, 0, "compressed node without payload"});
      return out;
    }
    const PlaPayload& p = *node.pla;
    for (std::size_t i = 0; i < p.keys.size(); ++i) {
      if (i && p.keys[i] <= p.keys[i - 1])
        out.push_back({&node, 0, i, "packed keys not strictly increasing"});
      const std::size_t pred = p.predict(p.keys[i]);
      const std::size_t err = pred > i ? pred - i : i - pred;
      if (err > p.epsilon)
        out.push_back({&node, 0, i,
                       "placement error " + std::to_string(err) + " exceeds epsilon " +
                           std::to_string(p.epsilon)});
    }
    return out;
  }
  if (node.segs.empty()) {
    out.push_back({&node, 0, 0, "node without segments"});
    return out;
  }
  for (std::size_t si = 0; si < node.segs.size(); ++si) {
    const Segment& seg = node.segs[si];
    for (std::uint32_t i = 0; i < seg.num_slots; ++i) {
      const Slot::Snapshot s = seg.slots[i].read();
      if (s.tag != Slot::kEntry) continue;
      if (&node.dispatch(s.key) != &seg)
        out.push_back({&node, si, i, "dispatch does not route key to its segment"});
      const std::size_t pred = seg.model.predict(s.key, seg.num_slots);
      if (pred != i)
        out.push_back({&node, si, i,
                       "entry at slot " + std::to_string(i) + " but predicted " +
                           std::to_string(pred)});
    }
  }
  return out;
}

namespace detail {

inline void validate_rec(const Node& node, std::uint32_t depth, bool& have_prev, Key& prev,
                         std::vector<Violation>& out) {
  if (node.meta.depth_hint != depth)
    out.push_back({&node, 0, 0,
                   "depth_hint " + std::to_string(node.meta.depth_hint) + " but path length " +
                       std::to_string(depth)});
  auto check_key = [&](Key k, std::size_t si, std::size_t i) {
    if (have_prev && k <= prev)
      out.push_back({&node, si, i, "in-order key " + std::to_string(k) + " not increasing"});
    have_prev = true;
    prev = k;
  };
  auto one = validate_node(node);
  out.insert(out.end(), one.begin(), one.end());
  if (node.meta.kind == NodeKind::Compressed) {
    for (std::size_t i = 0; node.pla && i < node.pla->keys.size(); ++i)
      check_key(node.pla->keys[i], 0, i);
    return;
  }
  for (std::size_t si = 0; si < node.segs.size(); ++si) {
    const Segment& seg = node.segs[si];
    for (std::uint32_t i = 0; i < seg.num_slots; ++i) {
      const std::uint64_t v = seg.slots[i].version.load(std::memory_order_acquire);
      if (v & 1u)
        out.push_back({&node, si, i, "slot version locked/odd in quiescent tree"});
      const Slot::Snapshot s = seg.slots[i].read();
      if (s.tag == Slot::kEntry) check_key(s.key, si, i);
      else if (s.tag == Slot::kChild)
        validate_rec(*node_of(s.payload), depth + 1, have_prev, prev, out);
    }
  }
}

}  // namespace detail

// Full-tree validation from a root: per-node checks plus global in-order
// strict monotonicity and depth_hint accuracy. Quiescent use only.
inline std::vector<Violation> validate_tree(const Node& root) {
  std::vector<Violation> out;
  bool have_prev = false;
  Key prev = 0;
  detail::validate_rec(root, 1, have_prev, prev, out);
  return out;
}

}  // namespace sali
