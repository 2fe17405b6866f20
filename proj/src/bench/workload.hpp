#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bench/dataset.hpp"
#include "sali/config.hpp"
#include "sali/index.hpp"

namespace sali::bench {

enum class WorkloadKind : std::uint8_t {
  ReadOnly,
  ReadIntensive,  // 20% insert
  Balanced,       // 50% insert
  WriteOnly,
  HotReadA,       // reads over a 1/10 hot set, five rounds
  HotReadB,       // HotReadA plus extra inserts (about 16% insert)
  HotWrite        // one-eighth consecutive key range inserted after the rest
};

const char* to_string(WorkloadKind k);
WorkloadKind workload_from_string(const std::string& s);

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::Balanced;
  std::string dataset = "easy";
  std::size_t n = 1'000'000;
  unsigned threads = 1;
  std::uint64_t seed = 42;
  std::size_t op_count = 0;  // 0 = kind default; otherwise truncates the stream
  unsigned repeats = 5;
};

struct Op {
  enum Type : std::uint8_t { kLookup = 0, kInsert = 1 };
  std::uint8_t type;
  Key key;
};

struct PreparedWorkload {
  std::vector<std::pair<Key, Value>> load;  // sorted, for bulk_load
  std::vector<Op> ops;
  std::size_t lookups = 0;
  std::size_t inserts = 0;
};

// Deterministic under (spec, dataset): the load split, hot sets and op order
// all derive from spec.seed. Values equal their key.
PreparedWorkload prepare_workload(const WorkloadSpec& spec, const Dataset& data);

struct LatencyStats {
  double p50_ns = 0;
  double p99_ns = 0;
  double p999_ns = 0;
  std::uint64_t samples = 0;
};

struct RepeatResult {
  double throughput_mops = 0;  // million ops per second
  double elapsed_s = 0;
  LatencyStats latency;
  IndexStats stats_before;
  IndexStats stats_after;
  OpCounters counters;
  std::uint64_t stat_writes = 0;  // fast-path counter writes (instrumentation)
  std::uint64_t found = 0;
  std::uint64_t notfound = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t ops_executed = 0;
};

struct RunReport {
  WorkloadSpec spec;
  EvolveConfig config;
  std::string dataset;
  std::string git_rev;
  std::vector<RepeatResult> repeats;
  // Aggregates over the kept repeats (lowest and highest throughput dropped
  // when there are at least three).
  double throughput_mops = 0;
  LatencyStats latency;
};

// Bulk-loads the load fraction, drives `threads` workers over disjoint slices
// of the op stream, samples latency 1-in-64, and repeats with a fresh index
// each time.
RunReport run_workload(const WorkloadSpec& spec, const EvolveConfig& cfg);

// Single repeat against an existing prepared workload (exposed for tests).
RepeatResult run_once(const PreparedWorkload& w, const WorkloadSpec& spec,
                      const EvolveConfig& cfg);

}  // namespace sali::bench
