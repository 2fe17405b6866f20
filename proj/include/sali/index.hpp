#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sali/build.hpp"
#include "sali/clock.hpp"
#include "sali/config.hpp"
#include "sali/cooling.hpp"
#include "sali/epoch.hpp"
#include "sali/evolve.hpp"
#include "sali/node.hpp"
#include "sali/pla.hpp"
#include "sali/prob.hpp"
#include "sali/rng.hpp"
#include "sali/validate.hpp"

namespace sali {

enum class InsertResult : std::uint8_t { Ok, DuplicateKey };

struct IndexStats {
  std::uint64_t entry_count = 0;
  std::uint64_t node_count = 0;
  std::uint64_t max_depth = 0;
  double avg_depth = 0.0;  // entry-weighted
  std::uint64_t bytes_internal = 0;
  std::uint64_t bytes_total = 0;
  std::uint64_t hot_lookup_nodes = 0;
  std::uint64_t compressed_nodes = 0;
};

struct OpCounters {
  std::uint64_t insert_evolves = 0;
  std::uint64_t lookup_evolves = 0;
  std::uint64_t evolve_skips = 0;
  std::uint64_t compressions = 0;
  std::uint64_t decompressions = 0;
  std::uint64_t rebuilds = 0;
  std::uint64_t chain_creations = 0;
  std::uint64_t compress_bytes_before = 0;
  std::uint64_t compress_bytes_after = 0;
};

struct LookupProbe {
  std::optional<Value> value;
  std::uint32_t depth = 0;        // nodes on the descent path
  std::uint32_t slot_probes = 0;  // slots touched (plus binary-search steps when compressed)
  bool through_compressed = false;
};

// The index handle. Shareable across threads: reads are lock-free with
// per-slot version validation, writes take only the one slot they touch, and
// subtree replacements publish through a single child-pointer swap with the
// displaced nodes retired into the epoch domain.
class SaliIndex {
 public:
  explicit SaliIndex(EvolveConfig cfg = {}) : cfg_(std::move(cfg)) {
    cfg_.validate();
    instance_id_ = next_instance_id();
    Node* root = build_empty_root(now_ticks(), cfg_);
    root_slot_.init_child(root);
    bytes_.fetch_add(static_cast<std::int64_t>(root->bytes()), std::memory_order_relaxed);
  }

  ~SaliIndex() {
    Node* root = root_unsafe();
    std::vector<Node*> all;
    for_each_node(root, [&](Node* n) { all.push_back(n); });
    for (Node* n : all) delete n;
  }

  SaliIndex(const SaliIndex&) = delete;
  SaliIndex& operator=(const SaliIndex&) = delete;

  const EvolveConfig& config() const { return cfg_; }
  void set_mode(StatsMode m) { cfg_.stats_mode = m; }  // quiescent use only
  void set_read_evolving(bool on) { cfg_.read_evolving_enabled = on; }

  // ---- bulk load ----------------------------------------------------------

  // Builds the root from sorted unique pairs. The index must still be empty.
  void bulk_load(std::span<const std::pair<Key, Value>> pairs) {
    std::vector<Key> keys;
    std::vector<Value> values;
    keys.reserve(pairs.size());
    values.reserve(pairs.size());
    for (const auto& [k, v] : pairs) {
      if (!keys.empty() && k <= keys.back())
        throw std::invalid_argument("bulk_load: keys must be strictly increasing");
      keys.push_back(k);
      values.push_back(v);
    }
    bulk_load_vectors(std::move(keys), std::move(values));
  }

  // ---- point and range operations ----------------------------------------

  std::optional<Value> lookup(Key k) {
    ThreadCtx& tc = local_ctx();
    EpochDomain::Guard g(epoch_, *tc.rec);
    Node* hot_node = nullptr;
    Slot* hot_slot = nullptr;
    Node* root_node = nullptr;
    const std::optional<Value> result = descend_lookup(k, nullptr, hot_node, hot_slot, root_node);
    if (cfg_.read_evolving_enabled) maybe_read_evolve(tc, hot_node, hot_slot, root_node);
    return result;
  }

  // Instrumented lookup; no read-evolve sampling.
  LookupProbe lookup_debug(Key k) {
    ThreadCtx& tc = local_ctx();
    EpochDomain::Guard g(epoch_, *tc.rec);
    LookupProbe probe;
    Node* hot_node = nullptr;
    Slot* hot_slot = nullptr;
    Node* root_node = nullptr;
    probe.value = descend_lookup(k, &probe, hot_node, hot_slot, root_node);
    return probe;
  }

  InsertResult insert(Key k, Value v) {
    ThreadCtx& tc = local_ctx();
    EpochDomain::Guard g(epoch_, *tc.rec);

    bool record_stats = false;
    if (cfg_.stats_mode == StatsMode::SharedCounter) {
      record_stats = true;
    } else if (cfg_.stats_mode == StatsMode::Sampling) {
      record_stats = ++tc.insert_tally % kSamplingPeriod == 0;
    }

    for (;;) {  // restarts when the descent runs into a dead slot
      PathBuf path;
      Slot* parent_slot = &root_slot_;
      Node* node = node_of(root_slot_.read().payload);
      bool restart = false;
      while (!restart) {
        if (node->meta.kind == NodeKind::Compressed) {
          // Cold nodes take no in-place writes: rebuild, then retry the slot.
          if (!decompress(parent_slot, node, path.span(), tc)) std::this_thread::yield();
          const Slot::Snapshot s = parent_slot->read();
          if (s.tag != Slot::kChild) {
            restart = true;
            break;
          }
          node = node_of(s.payload);
          continue;
        }
        path.push(node, parent_slot);
        if (record_stats) {
          node->meta.insert_count.fetch_add(1, std::memory_order_relaxed);
          tc.stat_writes.fetch_add(1, std::memory_order_relaxed);
        }
        Segment& seg = node->dispatch(k);
        Slot& slot = seg.slots[seg.model.predict(k, seg.num_slots)];
        const Slot::Snapshot snap = slot.read();
        if (snap.tag == Slot::kChild) {
          parent_slot = &slot;
          node = node_of(snap.payload);
          continue;
        }
        std::uint64_t token;
        if (!slot.lock(token)) {
          restart = true;
          break;
        }
        const std::uint8_t tag = slot.tag.load(std::memory_order_relaxed);
        if (tag == Slot::kGap) {
          slot.key.store(k, std::memory_order_relaxed);
          slot.payload.store(v, std::memory_order_relaxed);
          slot.tag.store(Slot::kEntry, std::memory_order_relaxed);
          slot.unlock(token);
          return InsertResult::Ok;
        }
        if (tag == Slot::kChild) {  // chained under us while we were reading
          slot.unlock(token);
          parent_slot = &slot;
          node = node_of(slot.read().payload);
          continue;
        }
        const Key existing_key = slot.key.load(std::memory_order_relaxed);
        if (existing_key == k) {
          if (cfg_.upsert_values) {
            slot.payload.store(v, std::memory_order_relaxed);
            slot.unlock(token);
            return InsertResult::Ok;
          }
          slot.unlock(token);
          return InsertResult::DuplicateKey;
        }
        // Occupied by a different key: chain both into a new child.
        const Value existing_val = slot.payload.load(std::memory_order_relaxed);
        const Tick now = now_ticks();
        Key pair_keys[2];
        Value pair_vals[2];
        if (k < existing_key) {
          pair_keys[0] = k, pair_keys[1] = existing_key;
          pair_vals[0] = v, pair_vals[1] = existing_val;
        } else {
          pair_keys[0] = existing_key, pair_keys[1] = k;
          pair_vals[0] = existing_val, pair_vals[1] = v;
        }
        BuildRequest req;
        req.keys = std::span<const Key>(pair_keys, 2);
        req.values = std::span<const Value>(pair_vals, 2);
        req.target_slots = default_build_slots(2);
        req.depth = node->meta.depth_hint + 1;
        req.now = now;
        req.root_speed = cfg_.initial_speed;
        Node* child = build_node(req, cfg_);
        slot.key.store(0, std::memory_order_relaxed);
        slot.payload.store(reinterpret_cast<std::uint64_t>(child), std::memory_order_release);
        slot.tag.store(Slot::kChild, std::memory_order_relaxed);
        slot.unlock(token);
        bytes_.fetch_add(static_cast<std::int64_t>(child->bytes()), std::memory_order_relaxed);
        tc.chain_creations.fetch_add(1, std::memory_order_relaxed);
        handle_conflict(tc, path, now);
        return InsertResult::Ok;
      }
    }
  }

  std::vector<std::pair<Key, Value>> range_scan(Key start, std::size_t count) {
    std::vector<std::pair<Key, Value>> out;
    if (count == 0) return out;
    ThreadCtx& tc = local_ctx();
    EpochDomain::Guard g(epoch_, *tc.rec);
    out.reserve(std::min<std::size_t>(count, 1024));
    scan_node(node_of(root_slot_.read().payload), start, count, out);
    return out;
  }

  // ---- maintenance --------------------------------------------------------

  // Rebuilds the whole index from its current contents (manual; the automatic
  // variant has no defined trigger).
  void rebuild() {
    ThreadCtx& tc = local_ctx();
    EpochDomain::Guard g(epoch_, *tc.rec);
    Node* root = node_of(root_slot_.read().payload);
    evolve_subtree(&root_slot_, root, {}, EvolveMode::Rebuild, tc);
  }

  // ---- introspection ------------------------------------------------------

  // Exact when quiescent.
  IndexStats stats() {
    ThreadCtx& tc = local_ctx();
    EpochDomain::Guard g(epoch_, *tc.rec);
    IndexStats s;
    std::uint64_t depth_sum = 0;
    stats_rec(node_of(root_slot_.read().payload), 1, s, depth_sum);
    s.avg_depth = s.entry_count ? static_cast<double>(depth_sum) / static_cast<double>(s.entry_count)
                                : 0.0;
    const std::uint64_t payload = s.entry_count * (sizeof(Key) + sizeof(Value));
    s.bytes_internal = s.bytes_total > payload ? s.bytes_total - payload : 0;
    return s;
  }

  OpCounters counters() const {
    OpCounters c;
    c.insert_evolves = insert_evolves_.load(std::memory_order_relaxed);
    c.lookup_evolves = lookup_evolves_.load(std::memory_order_relaxed);
    c.evolve_skips = evolve_skips_.load(std::memory_order_relaxed);
    c.compressions = compressions_.load(std::memory_order_relaxed);
    c.decompressions = decompressions_.load(std::memory_order_relaxed);
    c.rebuilds = rebuilds_.load(std::memory_order_relaxed);
    c.compress_bytes_before = compress_bytes_before_.load(std::memory_order_relaxed);
    c.compress_bytes_after = compress_bytes_after_.load(std::memory_order_relaxed);
    std::lock_guard<std::mutex> lk(ctx_mu_);
    for (const auto& ctx : ctxs_)
      c.chain_creations += ctx->chain_creations.load(std::memory_order_relaxed);
    return c;
  }

  // Bytes currently accounted to live structure (the size-cap input).
  std::uint64_t accounted_bytes() const {
    const std::int64_t b = bytes_.load(std::memory_order_relaxed);
    return b > 0 ? static_cast<std::uint64_t>(b) : 0;
  }

  // Statistic-counter writes performed on the insert path (instrumentation
  // for the ablation; stays zero in Probability mode). Quiescent use.
  std::uint64_t fast_path_stat_writes() const {
    std::lock_guard<std::mutex> lk(ctx_mu_);
    std::uint64_t total = 0;
    for (const auto& ctx : ctxs_) total += ctx->stat_writes.load(std::memory_order_relaxed);
    return total;
  }

  std::size_t cooling_pool_size() const { return pool_.size(); }
  bool cooling_pool_contains(const Node* n) const { return pool_.contains(n); }

  // Quiescent-only direct access for validation oracles.
  Node* root_unsafe() { return node_of(root_slot_.payload.load(std::memory_order_acquire)); }
  std::vector<Violation> validate() { return validate_tree(*root_unsafe()); }

 private:
  static constexpr std::uint32_t kSamplingPeriod = 10;

  struct ThreadCtx {
    EpochDomain::Rec* rec = nullptr;
    SplitMix64 rng{0};
    ThreadLocalSampler sampler;
    std::uint64_t insert_tally = 0;
    std::atomic<std::uint64_t> stat_writes{0};
    std::atomic<std::uint64_t> chain_creations{0};
  };

  struct PathBuf {
    Node* nodes[kMaxBuildDepth];
    Slot* parent_slots[kMaxBuildDepth];
    std::uint32_t len = 0;
    void push(Node* n, Slot* parent) {
      SALI_ASSERT(len < kMaxBuildDepth);
      nodes[len] = n;
      parent_slots[len] = parent;
      ++len;
    }
    std::span<Node* const> span() const { return {nodes, len}; }
    std::span<Node* const> ancestors_of(std::uint32_t i) const { return {nodes, i}; }
  };

  enum class EvolveMode : std::uint8_t { Insert, Lookup, Compress, Decompress, Rebuild };

  // ---- descent ------------------------------------------------------------

  std::optional<Value> descend_lookup(Key k, LookupProbe* probe, Node*& hot_node,
                                      Slot*& hot_slot, Node*& root_node) {
    Node* node = node_of(root_slot_.read().payload);
    root_node = node;
    std::uint32_t depth = 1;
    for (;;) {
      if (node->meta.kind == NodeKind::Compressed) {
        std::uint32_t bin_probes = 0;
        const auto r = node->pla->find(k, &bin_probes);
        if (probe) {
          probe->depth = depth;
          probe->slot_probes += 1 + bin_probes;
          probe->through_compressed = true;
        }
        return r;
      }
      const Segment& seg = node->dispatch(k);
      const Slot& slot = seg.slots[seg.model.predict(k, seg.num_slots)];
      const Slot::Snapshot snap = slot.read();
      if (probe) ++probe->slot_probes;
      if (snap.tag == Slot::kChild) {
        Node* child = node_of(snap.payload);
        if (hot_node == nullptr) {
          hot_node = child;
          hot_slot = const_cast<Slot*>(&slot);
        }
        node = child;
        ++depth;
        continue;
      }
      if (probe) probe->depth = depth;
      if (snap.tag == Slot::kEntry && snap.key == k) return snap.payload;
      return std::nullopt;
    }
  }

  void maybe_read_evolve(ThreadCtx& tc, Node* hot_node, Slot* hot_slot, Node* root_node) {
    if (hot_node == nullptr) {
      if (++tc.sampler.skip_counter >= cfg_.lookup_sample_period) tc.sampler.skip_counter = 0;
      return;
    }
    const TriggerDecision td =
        sample_hot_lookup(tc.sampler, *hot_node, now_ticks(), tc.rng, cfg_);
    if (!td.evolve) return;
    Node* ancestors[1] = {root_node};
    evolve_subtree(hot_slot, hot_node, std::span<Node* const>(ancestors, 1), EvolveMode::Lookup,
                   tc);
  }

  // A conflict happened inside the subtree of every node on the path, so each
  // is an evolve candidate with its own conflict budget. Scanned top-down;
  // evolving the topmost trigger subsumes anything below it.
  void handle_conflict(ThreadCtx& tc, const PathBuf& path, Tick now) {
    switch (cfg_.stats_mode) {
      case StatsMode::Probability: {
        for (std::uint32_t d = 0; d < path.len; ++d) {
          Node* cand = path.nodes[d];
          const TriggerDecision td = on_conflict(*cand, now, tc.rng, cfg_);
          if (td.evolve) {
            evolve_subtree(path.parent_slots[d], cand, path.ancestors_of(d), EvolveMode::Insert,
                           tc);
            break;
          }
        }
        break;
      }
      case StatsMode::SharedCounter:
      case StatsMode::Sampling: {
        const std::uint64_t scale = cfg_.stats_mode == StatsMode::Sampling ? kSamplingPeriod : 1;
        for (std::uint32_t d = 0; d < path.len; ++d) {
          path.nodes[d]->meta.conflict_count.fetch_add(1, std::memory_order_relaxed);
          tc.stat_writes.fetch_add(1, std::memory_order_relaxed);
        }
        for (std::uint32_t d = 0; d < path.len; ++d) {
          Node* cand = path.nodes[d];
          const std::uint64_t gained =
              cand->meta.insert_count.load(std::memory_order_relaxed) * scale;
          const std::uint64_t conflicts =
              cand->meta.conflict_count.load(std::memory_order_relaxed);
          const std::uint64_t build = cand->meta.build_num;
          const bool cond_acc =
              static_cast<double>(build + gained) >= cfg_.beta * static_cast<double>(build);
          const bool cond_conflict =
              static_cast<double>(conflicts) >= cfg_.alpha * static_cast<double>(gained);
          if (cond_acc && cond_conflict) {
            evolve_subtree(path.parent_slots[d], cand, path.ancestors_of(d), EvolveMode::Insert,
                           tc);
            break;
          }
        }
        break;
      }
      case StatsMode::Off:
        break;
    }
  }

  // ---- scan ---------------------------------------------------------------

  bool scan_node(Node* node, Key start, std::size_t count,
                 std::vector<std::pair<Key, Value>>& out) {
    if (node->meta.kind == NodeKind::Compressed) {
      const PlaPayload& p = *node->pla;
      auto it = std::lower_bound(p.keys.begin(), p.keys.end(), start);
      for (std::size_t i = static_cast<std::size_t>(it - p.keys.begin()); i < p.keys.size();
           ++i) {
        out.emplace_back(p.keys[i], p.values[i]);
        if (out.size() >= count) return false;
      }
      return true;
    }
    for (std::size_t si = 0; si < node->segs.size(); ++si) {
      const Segment& seg = node->segs[si];
      if (si + 1 < node->segs.size() && seg.max_key < start) continue;
      const std::size_t first = seg.model.predict(start, seg.num_slots);
      for (std::size_t i = first; i < seg.num_slots; ++i) {
        const Slot::Snapshot s = seg.slots[i].read();
        if (s.tag == Slot::kEntry) {
          if (s.key < start) continue;
          out.emplace_back(s.key, s.payload);
          if (out.size() >= count) return false;
        } else if (s.tag == Slot::kChild) {
          if (!scan_node(node_of(s.payload), start, count, out)) return false;
        }
      }
    }
    return true;
  }

  // ---- stats --------------------------------------------------------------

  void stats_rec(Node* node, std::uint64_t depth, IndexStats& s, std::uint64_t& depth_sum) {
    ++s.node_count;
    s.bytes_total += node->bytes();
    s.max_depth = std::max(s.max_depth, depth);
    if (node->meta.kind == NodeKind::HotLookup) ++s.hot_lookup_nodes;
    if (node->meta.kind == NodeKind::Compressed) ++s.compressed_nodes;
    if (node->meta.kind == NodeKind::Compressed) {
      const std::uint64_t n = node->pla->keys.size();
      s.entry_count += n;
      depth_sum += n * depth;
      return;
    }
    for (const auto& seg : node->segs)
      for (std::uint32_t i = 0; i < seg.num_slots; ++i) {
        const Slot::Snapshot snap = seg.slots[i].read();
        if (snap.tag == Slot::kEntry) {
          ++s.entry_count;
          depth_sum += depth;
        } else if (snap.tag == Slot::kChild) {
          stats_rec(node_of(snap.payload), depth + 1, s, depth_sum);
        }
      }
  }

  // ---- evolving -----------------------------------------------------------

  struct CollectResult {
    std::vector<Key> keys;
    std::vector<Value> values;
    std::vector<Node*> old_nodes;
    std::uint64_t old_bytes = 0;
    std::uint32_t max_rel_depth = 0;
  };

  // Pre-flight estimate without freezing anything: entry count (early-exits
  // at `limit`) and relative subtree depth.
  static void probe_subtree(Node* node, std::uint32_t rel_depth, std::uint64_t limit,
                            std::uint64_t& count, std::uint32_t& max_depth) {
    max_depth = std::max(max_depth, rel_depth);
    if (node->meta.kind == NodeKind::Compressed) {
      count += node->pla->keys.size();
      return;
    }
    for (const auto& seg : node->segs)
      for (std::uint32_t i = 0; i < seg.num_slots && count < limit; ++i) {
        const Slot::Snapshot s = seg.slots[i].read();
        if (s.tag == Slot::kEntry) ++count;
        else if (s.tag == Slot::kChild)
          probe_subtree(node_of(s.payload), rel_depth + 1, limit, count, max_depth);
      }
  }

  // Locks, reads and permanently freezes every slot of the subtree in order.
  // In-flight writers either finish before their slot freezes (and are
  // collected) or observe a dead slot and restart against the replacement.
  void freeze_collect(Node* node, std::uint32_t rel_depth, CollectResult& out) {
    out.old_nodes.push_back(node);
    out.old_bytes += node->bytes();
    out.max_rel_depth = std::max(out.max_rel_depth, rel_depth);
    if (node->meta.kind == NodeKind::Compressed) {
      const PlaPayload& p = *node->pla;
      out.keys.insert(out.keys.end(), p.keys.begin(), p.keys.end());
      out.values.insert(out.values.end(), p.values.begin(), p.values.end());
      return;
    }
    for (auto& seg : node->segs)
      for (std::uint32_t i = 0; i < seg.num_slots; ++i) {
        Slot& slot = seg.slots[i];
        std::uint64_t token;
        const bool ok = slot.lock(token);
        SALI_ASSERT(ok);  // only the holder of the parent evolve lock freezes here
        const std::uint8_t tag = slot.tag.load(std::memory_order_relaxed);
        const Key k = slot.key.load(std::memory_order_relaxed);
        const std::uint64_t payload = slot.payload.load(std::memory_order_relaxed);
        slot.kill();
        if (tag == Slot::kEntry) {
          out.keys.push_back(k);
          out.values.push_back(payload);
        } else if (tag == Slot::kChild) {
          freeze_collect(node_of(payload), rel_depth + 1, out);
        }
      }
  }

  bool evolve_subtree(Slot* parent_slot, Node* node, std::span<Node* const> ancestors,
                      EvolveMode mode, ThreadCtx& tc) {
    std::uint64_t token;
    if (!parent_slot->evolve_try_lock(token)) {
      evolve_skips_.fetch_add(1, std::memory_order_relaxed);
      return false;
    }
    if (parent_slot->tag.load(std::memory_order_relaxed) != Slot::kChild ||
        node_of(parent_slot->payload.load(std::memory_order_relaxed)) != node) {
      parent_slot->evolve_abort(token);
      evolve_skips_.fetch_add(1, std::memory_order_relaxed);
      return false;
    }

    if (mode != EvolveMode::Rebuild) {
      std::uint64_t count = 0;
      std::uint32_t rel_depth = 0;
      probe_subtree(node, 1, cfg_.max_evolve_keys, count, rel_depth);
      const bool too_large = count >= cfg_.max_evolve_keys;
      const bool flat = mode == EvolveMode::Lookup && rel_depth <= 1;
      const bool empty = count == 0;
      if (too_large || flat || empty) {
        parent_slot->evolve_abort(token);
        evolve_skips_.fetch_add(1, std::memory_order_relaxed);
        return false;
      }
    }

    CollectResult col;
    freeze_collect(node, 1, col);
    for (std::size_t i = 1; i < col.keys.size(); ++i)
      SALI_ASSERT(col.keys[i - 1] < col.keys[i]);
    if (col.keys.empty()) {  // rebuild of an empty tree: keep an empty root
      if (mode == EvolveMode::Rebuild) {
        Node* fresh = build_empty_root(now_ticks(), cfg_);
        publish(parent_slot, token, node, fresh, col, ancestors, tc);
        rebuilds_.fetch_add(1, std::memory_order_relaxed);
        return true;
      }
      parent_slot->evolve_abort(token);  // unreachable: probe saw entries
      return false;
    }

    const Tick now = now_ticks();
    const double speed_prev = node->meta.speed;
    const double speed_now = update_speed(node->meta, col.keys.size(), now);
    NodeMeta eq_meta;  // Eq inputs: old build stats, current speed estimate
    eq_meta.build_num = node->meta.build_num;
    eq_meta.build_time = node->meta.build_time;
    eq_meta.speed = speed_now;
    eq_meta.depth_hint = node->meta.depth_hint;

    Node* fresh = nullptr;
    switch (mode) {
      case EvolveMode::Insert: {
        const std::uint64_t expand = compute_expand_size(eq_meta, speed_prev, cfg_);
        BuildRequest req;
        req.keys = col.keys;
        req.values = col.values;
        req.target_slots = expand;
        req.depth = node->meta.depth_hint;
        req.now = now;
        req.root_speed = speed_now;
        req.cause = EvolveCause::InsertEvolve;
        fresh = build_node(req, cfg_);
        insert_evolves_.fetch_add(1, std::memory_order_relaxed);
        break;
      }
      case EvolveMode::Lookup: {
        const std::uint64_t expand = compute_expand_size(eq_meta, speed_prev, cfg_);
        const FlattenPlan plan =
            plan_flatten(col.keys, cfg_.flatten_segments, expand);
        fresh = build_flattened_node(col.keys, col.values, plan, node->meta.depth_hint, now,
                                     speed_now, cfg_);
        lookup_evolves_.fetch_add(1, std::memory_order_relaxed);
        break;
      }
      case EvolveMode::Compress: {
        fresh = build_compressed_node(col.keys, col.values, cfg_.pla_epsilon,
                                      node->meta.depth_hint, now, speed_now);
        compressions_.fetch_add(1, std::memory_order_relaxed);
        compress_bytes_before_.fetch_add(col.old_bytes, std::memory_order_relaxed);
        compress_bytes_after_.fetch_add(fresh->bytes(), std::memory_order_relaxed);
        break;
      }
      case EvolveMode::Decompress: {
        BuildRequest req;
        req.keys = col.keys;
        req.values = col.values;
        req.target_slots = default_build_slots(col.keys.size());
        req.depth = node->meta.depth_hint;
        req.now = now;
        req.root_speed = speed_now;
        req.cause = EvolveCause::Build;
        fresh = build_node(req, cfg_);
        decompressions_.fetch_add(1, std::memory_order_relaxed);
        break;
      }
      case EvolveMode::Rebuild: {
        BuildRequest req;
        req.keys = col.keys;
        req.values = col.values;
        req.target_slots = default_build_slots(col.keys.size());
        req.depth = node->meta.depth_hint;
        req.now = now;
        req.root_speed = speed_now;
        req.cause = EvolveCause::Build;
        fresh = build_node(req, cfg_);
        rebuilds_.fetch_add(1, std::memory_order_relaxed);
        break;
      }
    }

    publish(parent_slot, token, node, fresh, col, ancestors, tc);
    if (mode != EvolveMode::Compress) enforce_size_cap(tc);
    return true;
  }

  void publish(Slot* parent_slot, std::uint64_t token, Node* old_node, Node* fresh,
               const CollectResult& col, std::span<Node* const> ancestors, ThreadCtx& tc) {
    // Cooling candidates are sampled from the new subtree before it goes
    // live, while parent slots are still stable.
    const Tick now = now_ticks();
    enqueue_candidates(fresh, parent_slot, tc, now);
    const std::uint64_t new_bytes = subtree_bytes(fresh);
    parent_slot->swap_child(fresh);
    parent_slot->evolve_commit(token);
    bytes_.fetch_add(static_cast<std::int64_t>(new_bytes) -
                         static_cast<std::int64_t>(col.old_bytes),
                     std::memory_order_relaxed);
    pool_.remove_on_evolve(old_node, ancestors);
    for (Node* n : col.old_nodes) epoch_.retire(*tc.rec, n, Node::deleter);
  }

  void enqueue_candidates(Node* fresh, Slot* fresh_parent, ThreadCtx& tc, Tick now) {
    pool_.maybe_enqueue(fresh, fresh_parent, tc.rng, cfg_, now);
    if (fresh->meta.kind == NodeKind::Compressed) return;
    for (auto& seg : fresh->segs)
      for (std::uint32_t i = 0; i < seg.num_slots; ++i) {
        const Slot::Snapshot s = seg.slots[i].read();
        if (s.tag == Slot::kChild)
          enqueue_candidates(node_of(s.payload), &seg.slots[i], tc, now);
      }
  }

  bool decompress(Slot* parent_slot, Node* node, std::span<Node* const> ancestors,
                  ThreadCtx& tc) {
    return evolve_subtree(parent_slot, node, ancestors, EvolveMode::Decompress, tc);
  }

  std::size_t enforce_size_cap(ThreadCtx& tc) {
    std::size_t compressed = 0;
    while (accounted_bytes() > cfg_.index_size_cap) {
      auto e = pool_.pop_oldest();
      if (!e) break;
      if (evolve_subtree(e->parent_slot, e->node, {}, EvolveMode::Compress, tc)) ++compressed;
    }
    return compressed;
  }

  void bulk_load_vectors(std::vector<Key> keys, std::vector<Value> values) {
    ThreadCtx& tc = local_ctx();
    EpochDomain::Guard g(epoch_, *tc.rec);
    Node* root = node_of(root_slot_.read().payload);
    {
      std::uint64_t count = 0;
      std::uint32_t rel_depth = 0;
      probe_subtree(root, 1, 2, count, rel_depth);
      if (count != 0) throw std::logic_error("bulk_load requires an empty index");
    }
    if (keys.empty()) return;
    std::uint64_t token;
    if (!root_slot_.evolve_try_lock(token))
      throw std::logic_error("bulk_load raced with another structural change");
    CollectResult col;
    freeze_collect(root, 1, col);
    BuildRequest req;
    req.keys = keys;
    req.values = values;
    req.target_slots = default_build_slots(keys.size());
    req.depth = 1;
    req.now = now_ticks();
    req.root_speed = cfg_.initial_speed;
    req.cause = EvolveCause::Build;
    Node* fresh = build_node(req, cfg_);
    publish(&root_slot_, token, root, fresh, col, {}, tc);
    enforce_size_cap(tc);
  }

  // ---- per-thread state ---------------------------------------------------

  ThreadCtx& local_ctx() {
    struct CacheEntry {
      const SaliIndex* idx;
      std::uint64_t id;
      ThreadCtx* ctx;
    };
    thread_local std::vector<CacheEntry> cache;
    for (const auto& e : cache)
      if (e.idx == this && e.id == instance_id_) return *e.ctx;
    std::lock_guard<std::mutex> lk(ctx_mu_);
    auto ctx = std::make_unique<ThreadCtx>();
    ctx->rec = epoch_.register_thread();
    ctx->rng = SplitMix64::split(cfg_.rng_seed, ctxs_.size());
    ThreadCtx* p = ctx.get();
    ctxs_.push_back(std::move(ctx));
    cache.push_back({this, instance_id_, p});
    return *p;
  }

  static std::uint64_t next_instance_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
  }

  EvolveConfig cfg_;
  std::uint64_t instance_id_ = 0;
  Slot root_slot_;
  EpochDomain epoch_;
  CoolingPool pool_;
  std::atomic<std::int64_t> bytes_{0};

  std::atomic<std::uint64_t> insert_evolves_{0};
  std::atomic<std::uint64_t> lookup_evolves_{0};
  std::atomic<std::uint64_t> evolve_skips_{0};
  std::atomic<std::uint64_t> compressions_{0};
  std::atomic<std::uint64_t> decompressions_{0};
  std::atomic<std::uint64_t> rebuilds_{0};
  std::atomic<std::uint64_t> compress_bytes_before_{0};
  std::atomic<std::uint64_t> compress_bytes_after_{0};

  mutable std::mutex ctx_mu_;
  std::vector<std::unique_ptr<ThreadCtx>> ctxs_;
};

}  // namespace sali
