#include "bench/workload.hpp"

#include <algorithm>
#include <chrono>
#include <latch>
#include <limits>
#include <stdexcept>
#include <thread>

#include "sali/rng.hpp"

namespace sali::bench {

const char* to_string(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::ReadOnly: return "read-only";
    case WorkloadKind::ReadIntensive: return "read-intensive";
    case WorkloadKind::Balanced: return "balanced";
    case WorkloadKind::WriteOnly: return "write-only";
    case WorkloadKind::HotReadA: return "hot-read-a";
    case WorkloadKind::HotReadB: return "hot-read-b";
    case WorkloadKind::HotWrite: return "hot-write";
  }
  return "?";
}

WorkloadKind workload_from_string(const std::string& s) {
  if (s == "read-only" || s == "readonly") return WorkloadKind::ReadOnly;
  if (s == "read-intensive" || s == "readintensive") return WorkloadKind::ReadIntensive;
  if (s == "balanced") return WorkloadKind::Balanced;
  if (s == "write-only" || s == "writeonly") return WorkloadKind::WriteOnly;
  if (s == "hot-read-a" || s == "hotreada") return WorkloadKind::HotReadA;
  if (s == "hot-read-b" || s == "hotreadb") return WorkloadKind::HotReadB;
  if (s == "hot-write" || s == "hotwrite") return WorkloadKind::HotWrite;
  throw std::invalid_argument("unknown workload: " + s);
}

namespace {

template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[rng.next_below(i)]);
}

std::vector<std::pair<Key, Value>> to_sorted_pairs(std::vector<Key> keys) {
  std::sort(keys.begin(), keys.end());
  std::vector<std::pair<Key, Value>> out;
  out.reserve(keys.size());
  for (Key k : keys) out.emplace_back(k, k);
  return out;
}

void append_lookups_random(std::vector<Op>& ops, const std::vector<Key>& pool, std::size_t n,
                           SplitMix64& rng) {
  for (std::size_t i = 0; i < n; ++i)
    ops.push_back({Op::kLookup, pool[rng.next_below(pool.size())]});
}

void append_inserts(std::vector<Op>& ops, const std::vector<Key>& keys) {
  for (Key k : keys) ops.push_back({Op::kInsert, k});
}

}  // namespace

PreparedWorkload prepare_workload(const WorkloadSpec& spec, const Dataset& data) {
  if (spec.threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (data.keys.size() < 16) throw std::invalid_argument("dataset too small");
  PreparedWorkload w;
  SplitMix64 rng = SplitMix64::split(spec.seed, 0xbe5c);
  std::vector<Key> keys = data.keys;
  shuffle(keys, rng);
  const std::size_t n = keys.size();

  switch (spec.kind) {
    case WorkloadKind::ReadOnly: {
      w.load = to_sorted_pairs(keys);
      append_lookups_random(w.ops, keys, spec.op_count ? spec.op_count : n, rng);
      break;
    }
    case WorkloadKind::ReadIntensive:
    case WorkloadKind::Balanced: {
      const std::size_t loaded = n / 2;
      std::vector<Key> load_keys(keys.begin(), keys.begin() + loaded);
      std::vector<Key> insert_keys(keys.begin() + loaded, keys.end());
      w.load = to_sorted_pairs(std::move(load_keys));
      append_inserts(w.ops, insert_keys);
      const std::size_t per_insert = spec.kind == WorkloadKind::ReadIntensive ? 4 : 1;
      append_lookups_random(w.ops, keys, insert_keys.size() * per_insert, rng);
      shuffle(w.ops, rng);
      break;
    }
    case WorkloadKind::WriteOnly: {
      const std::size_t loaded = n / 2;
      std::vector<Key> load_keys(keys.begin(), keys.begin() + loaded);
      std::vector<Key> insert_keys(keys.begin() + loaded, keys.end());
      w.load = to_sorted_pairs(std::move(load_keys));
      append_inserts(w.ops, insert_keys);
      shuffle(w.ops, rng);
      break;
    }
    case WorkloadKind::HotReadA: {
      w.load = to_sorted_pairs(keys);
      std::vector<Key> hot(keys.begin(), keys.begin() + std::max<std::size_t>(1, n / 10));
      for (int round = 0; round < 5; ++round) {
        shuffle(hot, rng);
        for (Key k : hot) w.ops.push_back({Op::kLookup, k});
      }
      break;
    }
    case WorkloadKind::HotReadB: {
      const std::size_t loaded = n * 10 / 11;
      std::vector<Key> load_keys(keys.begin(), keys.begin() + loaded);
      std::vector<Key> insert_keys(keys.begin() + loaded, keys.end());
      std::vector<Key> hot(load_keys.begin(),
                           load_keys.begin() + std::max<std::size_t>(1, loaded / 10));
      w.load = to_sorted_pairs(std::move(load_keys));
      for (int round = 0; round < 5; ++round) {
        shuffle(hot, rng);
        for (Key k : hot) w.ops.push_back({Op::kLookup, k});
      }
      append_inserts(w.ops, insert_keys);
      shuffle(w.ops, rng);
      break;
    }
    case WorkloadKind::HotWrite: {
      std::vector<Key> sorted = keys;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t hot_n = std::max<std::size_t>(1, n / 8);
      const std::size_t start = rng.next_below(n - hot_n + 1);
      std::vector<Key> hot(sorted.begin() + start, sorted.begin() + start + hot_n);
      std::vector<Key> rest;
      rest.reserve(n - hot_n);
      rest.insert(rest.end(), sorted.begin(), sorted.begin() + start);
      rest.insert(rest.end(), sorted.begin() + start + hot_n, sorted.end());
      w.load = to_sorted_pairs(std::move(rest));
      shuffle(hot, rng);
      append_inserts(w.ops, hot);
      break;
    }
  }

  if (spec.op_count && spec.op_count < w.ops.size()) w.ops.resize(spec.op_count);
  for (const Op& op : w.ops)
    (op.type == Op::kInsert ? w.inserts : w.lookups)++;
  return w;
}

RepeatResult run_once(const PreparedWorkload& w, const WorkloadSpec& spec,
                      const EvolveConfig& cfg) {
  RepeatResult r;
  SaliIndex index(cfg);
  index.bulk_load(w.load);
  r.stats_before = index.stats();

  const unsigned threads = spec.threads;
  const std::size_t per = (w.ops.size() + threads - 1) / threads;
  struct WorkerOut {
    std::uint64_t found = 0, notfound = 0, duplicates = 0, ops = 0;
    std::vector<std::uint32_t> latencies_ns;
  };
  std::vector<WorkerOut> outs(threads);
  std::latch ready(threads);
  std::latch go(1);
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      const std::size_t lo = std::min<std::size_t>(t * per, w.ops.size());
      const std::size_t hi = std::min<std::size_t>(lo + per, w.ops.size());
      WorkerOut& out = outs[t];
      out.latencies_ns.reserve((hi - lo) / 64 + 1);
      ready.count_down();
      go.wait();
      for (std::size_t i = lo; i < hi; ++i) {
        const Op& op = w.ops[i];
        const bool sample = ((i - lo) & 63) == 0;
        const auto t0 = sample ? std::chrono::steady_clock::now()
                               : std::chrono::steady_clock::time_point{};
        if (op.type == Op::kLookup) {
          if (index.lookup(op.key)) ++out.found;
          else ++out.notfound;
        } else {
          if (index.insert(op.key, op.key) == InsertResult::DuplicateKey) ++out.duplicates;
        }
        if (sample) {
          const auto dt = std::chrono::steady_clock::now() - t0;
          out.latencies_ns.push_back(static_cast<std::uint32_t>(std::min<std::int64_t>(
              std::chrono::duration_cast<std::chrono::nanoseconds>(dt).count(),
              std::numeric_limits<std::uint32_t>::max())));
        }
        ++out.ops;
      }
    });
  }
  ready.wait();
  const auto t0 = std::chrono::steady_clock::now();
  go.count_down();
  for (auto& th : workers) th.join();
  const auto t1 = std::chrono::steady_clock::now();

  r.elapsed_s = std::chrono::duration<double>(t1 - t0).count();
  std::vector<std::uint32_t> lat;
  for (auto& o : outs) {
    r.found += o.found;
    r.notfound += o.notfound;
    r.duplicates += o.duplicates;
    r.ops_executed += o.ops;
    lat.insert(lat.end(), o.latencies_ns.begin(), o.latencies_ns.end());
  }
  r.throughput_mops =
      r.elapsed_s > 0 ? static_cast<double>(r.ops_executed) / r.elapsed_s / 1e6 : 0;
  std::sort(lat.begin(), lat.end());
  auto pct = [&](double q) {
    if (lat.empty()) return 0.0;
    const std::size_t i = std::min(lat.size() - 1,
                                   static_cast<std::size_t>(q * static_cast<double>(lat.size())));
    return static_cast<double>(lat[i]);
  };
  r.latency = {pct(0.50), pct(0.99), pct(0.999), lat.size()};
  r.stats_after = index.stats();
  r.counters = index.counters();
  r.stat_writes = index.fast_path_stat_writes();
  return r;
}

RunReport run_workload(const WorkloadSpec& spec, const EvolveConfig& cfg) {
  RunReport rep;
  rep.spec = spec;
  rep.config = cfg;
  rep.dataset = spec.dataset;
#ifdef SALI_GIT_REV
  rep.git_rev = SALI_GIT_REV;
#else
  rep.git_rev = "unknown";
#endif
  const Dataset data = generate_dataset(spec.dataset, spec.n, spec.seed);
  const PreparedWorkload w = prepare_workload(spec, data);
  const unsigned repeats = std::max(1u, spec.repeats);
  for (unsigned i = 0; i < repeats; ++i) rep.repeats.push_back(run_once(w, spec, cfg));

  // Trimmed aggregate: drop the lowest and highest throughput repeat when
  // there are at least three.
  std::vector<std::size_t> kept(rep.repeats.size());
  for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = i;
  if (kept.size() >= 3) {
    auto by_tp = [&](std::size_t a, std::size_t b) {
      return rep.repeats[a].throughput_mops < rep.repeats[b].throughput_mops;
    };
    const auto lo = *std::min_element(kept.begin(), kept.end(), by_tp);
    const auto hi = *std::max_element(kept.begin(), kept.end(), by_tp);
    kept.erase(std::remove_if(kept.begin(), kept.end(),
                              [&](std::size_t i) { return i == lo || i == hi; }),
               kept.end());
  }
  double tp = 0;
  std::uint64_t samples = 0;
  double p50 = 0, p99 = 0, p999 = 0;
  for (std::size_t i : kept) {
    tp += rep.repeats[i].throughput_mops;
    const LatencyStats& l = rep.repeats[i].latency;
    p50 += l.p50_ns * static_cast<double>(l.samples);
    p99 += l.p99_ns * static_cast<double>(l.samples);
    p999 += l.p999_ns * static_cast<double>(l.samples);
    samples += l.samples;
  }
  rep.throughput_mops = kept.empty() ? 0 : tp / static_cast<double>(kept.size());
  if (samples > 0)
    rep.latency = {p50 / static_cast<double>(samples), p99 / static_cast<double>(samples),
                   p999 / static_cast<double>(samples), samples};
  return rep;
}

}  // namespace sali::bench
