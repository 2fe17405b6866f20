#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <span>
#include <unordered_set>

#include "sali/clock.hpp"
#include "sali/config.hpp"
#include "sali/node.hpp"
#include "sali/rng.hpp"

namespace sali {

// FIFO of probabilistically sampled nodes. Whatever still sits in the pool
// when the size cap bites is considered cold and gets compressed, oldest
// first. Pool mutations happen only at build/evolve time, never on the
// lookup/insert fast path.
class CoolingPool {
 public:
  struct Entry {
    Node* node;
    Slot* parent_slot;
    Tick enqueued;
  };

  // Bernoulli(cooling_probability) admission for a freshly built node.
  bool maybe_enqueue(Node* node, Slot* parent_slot, SplitMix64& rng, const EvolveConfig& cfg,
                     Tick now) {
    if (node->meta.kind == NodeKind::Compressed) return false;
    if (!rng.bernoulli(cfg.cooling_probability)) return false;
    std::lock_guard<std::mutex> g(mu_);
    if (!members_.insert(node).second) return false;
    fifo_.push_back({node, parent_slot, now});
    return true;
  }

  // An evolved node, everything in its subtree, and every ancestor on its
  // root path stop being cold. The subtree walk requires the old subtree to
  // be frozen or quiescent.
  void remove_on_evolve(Node* evolved, std::span<Node* const> ancestors) {
    std::lock_guard<std::mutex> g(mu_);
    if (!members_.empty())
      for_each_node(evolved, [&](Node* n) { members_.erase(n); });
    for (Node* a : ancestors) members_.erase(a);
  }

  void remove(const Node* node) {
    std::lock_guard<std::mutex> g(mu_);
    members_.erase(node);
  }

  // Oldest surviving member; stale queue entries (already removed) are
  // discarded on the way.
  std::optional<Entry> pop_oldest() {
    std::lock_guard<std::mutex> g(mu_);
    while (!fifo_.empty()) {
      Entry e = fifo_.front();
      fifo_.pop_front();
      if (members_.erase(e.node) == 1) return e;
    }
    return std::nullopt;
  }

  bool contains(const Node* node) const {
    std::lock_guard<std::mutex> g(mu_);
    return members_.count(node) != 0;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> g(mu_);
    return members_.size();
  }

 private:
  mutable std::mutex mu_;
  std::deque<Entry> fifo_;
  std::unordered_set<const Node*> members_;
};

}  // namespace sali
