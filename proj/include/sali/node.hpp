#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "sali/clock.hpp"
#include "sali/model.hpp"
#include "sali/slot.hpp"

namespace sali {

enum class NodeKind : std::uint8_t { Normal, HotLookup, Compressed };
enum class EvolveCause : std::uint8_t { Build, InsertEvolve, LookupEvolve, Compress };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Normal: return "normal";
    case NodeKind::HotLookup: return "hot_lookup";
    case NodeKind::Compressed: return "compressed";
  }
  return "?";
}

// Everything below except the two ablation counters is written before the
// node is published and never mutated afterwards; replacement nodes carry
// fresh meta. The counters are touched only in SharedCounter/Sampling mode.
struct NodeMeta {
  std::uint64_t build_num = 1;   // subtree keys at last build/evolve
  Tick build_time = 0;
  double speed = 0.0;            // estimated keys per tick over the last period
  NodeKind kind = NodeKind::Normal;
  EvolveCause last_evolve_cause = EvolveCause::Build;
  std::uint32_t depth_hint = 1;  // nodes on the path from the root, inclusive

  std::atomic<std::uint64_t> insert_count{0};    // inserts seen since build (ablation modes)
  std::atomic<std::uint64_t> conflict_count{0};  // conflicts seen since build (ablation modes)
};

// One (model, slot array) pair. Normal nodes have exactly one; a flattened
// hot-lookup node hangs several side by side and dispatches on max_key.
struct Segment {
  LinearModel model;
  Key max_key = 0;  // largest subtree key at build time; dispatch boundary
  std::uint32_t num_slots = 0;
  std::unique_ptr<Slot[]> slots;

  Segment() = default;
  Segment(LinearModel m, Key mk, std::uint32_t n)
      : model(m), max_key(mk), num_slots(n), slots(new Slot[n]) {}
};

// Compressed (cold) node payload: gap-free sorted entries plus piecewise
// linear models with a bounded placement error.
struct PlaSegment {
  Key first_key = 0;
  double slope = 0.0;
  double offset = 0.0;       // local intercept relative to first_key
  std::uint64_t base = 0;    // index of the segment's first entry
  std::uint64_t count = 0;
};

struct PlaPayload {
  std::uint32_t epsilon = 0;
  std::vector<PlaSegment> segs;
  std::vector<Key> keys;
  std::vector<Value> values;

  // Predicted index into keys[], clamped to the owning segment's range.
  std::size_t predict(Key k) const {
    std::size_t lo = 0, hi = segs.size();  // last segment with first_key <= k
    while (lo + 1 < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (segs[mid].first_key <= k) lo = mid;
      else hi = mid;
    }
    const PlaSegment& s = segs[lo];
    const long double local =
        static_cast<long double>(s.slope) *
            static_cast<long double>(k - std::min(k, s.first_key)) +
        static_cast<long double>(s.offset);
    std::uint64_t idx = s.base;
    if (local > 0.0L) idx += static_cast<std::uint64_t>(local);
    const std::uint64_t last = s.base + s.count - 1;
    if (idx > last) idx = last;
    if (idx < s.base) idx = s.base;
    return static_cast<std::size_t>(idx);
  }

  // Binary search within +-epsilon of the prediction. probes counts the
  // comparisons performed.
  std::optional<Value> find(Key k, std::uint32_t* probes = nullptr) const {
    if (keys.empty()) return std::nullopt;
    const std::size_t p = predict(k);
    std::size_t lo = p > epsilon ? p - epsilon : 0;
    std::size_t hi = std::min(keys.size(), p + epsilon + 1);
    std::uint32_t n = 0;
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      ++n;
      if (keys[mid] < k) lo = mid + 1;
      else hi = mid;
    }
    if (probes) *probes = n;
    if (lo < keys.size() && keys[lo] == k) return values[lo];
    return std::nullopt;
  }
};

struct Node {
  NodeMeta meta;
  std::vector<Segment> segs;          // empty iff Compressed
  std::unique_ptr<PlaPayload> pla;    // present iff Compressed

  // Dispatch for lookup/insert descent; HotLookup picks by boundary key.
  Segment& dispatch(Key k) {
    if (segs.size() > 1)
      for (std::size_t i = 0; i + 1 < segs.size(); ++i)
        if (k <= segs[i].max_key) return segs[i];
    return segs.back();
  }
  const Segment& dispatch(Key k) const { return const_cast<Node*>(this)->dispatch(k); }

  std::size_t bytes() const {
    std::size_t b = sizeof(Node) + segs.capacity() * sizeof(Segment);
    for (const auto& s : segs) b += std::size_t{s.num_slots} * sizeof(Slot);
    if (pla) {
      b += sizeof(PlaPayload);
      b += pla->segs.capacity() * sizeof(PlaSegment);
      b += pla->keys.capacity() * sizeof(Key) + pla->values.capacity() * sizeof(Value);
    }
    return b;
  }

  static void deleter(void* p) { delete static_cast<Node*>(p); }
};

inline Node* node_of(std::uint64_t payload) { return reinterpret_cast<Node*>(payload); }

// Visits node and every descendant reachable through Child slots. Only safe
// when the subtree is quiescent, frozen, or not yet published.
template <typename Fn>
void for_each_node(Node* node, Fn&& fn) {
  fn(node);
  for (auto& seg : node->segs)
    for (std::uint32_t i = 0; i < seg.num_slots; ++i) {
      const Slot::Snapshot s = seg.slots[i].read();
      if (s.tag == Slot::kChild) for_each_node(node_of(s.payload), fn);
    }
}

inline std::size_t subtree_bytes(Node* node) {
  std::size_t total = 0;
  for_each_node(node, [&](Node* n) { total += n->bytes(); });
  return total;
}

}  // namespace sali
