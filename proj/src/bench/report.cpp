#include "bench/report.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sali::bench {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json stats_to_json(const IndexStats& s) {
  return ordered_json{{"entry_count", s.entry_count}, {"node_count", s.node_count},
                      {"max_depth", s.max_depth},     {"avg_depth", s.avg_depth},
                      {"bytes_internal", s.bytes_internal}, {"bytes_total", s.bytes_total}};
}

IndexStats stats_from_json(const ordered_json& j) {
  IndexStats s;
  s.entry_count = j.at("entry_count");
  s.node_count = j.at("node_count");
  s.max_depth = j.at("max_depth");
  s.avg_depth = j.at("avg_depth");
  s.bytes_internal = j.at("bytes_internal");
  s.bytes_total = j.at("bytes_total");
  return s;
}

ordered_json counters_to_json(const OpCounters& c) {
  return ordered_json{{"insert_evolves", c.insert_evolves},
                      {"lookup_evolves", c.lookup_evolves},
                      {"evolve_skips", c.evolve_skips},
                      {"compressions", c.compressions},
                      {"decompressions", c.decompressions},
                      {"rebuilds", c.rebuilds},
                      {"chain_creations", c.chain_creations},
                      {"compress_bytes_before", c.compress_bytes_before},
                      {"compress_bytes_after", c.compress_bytes_after}};
}

OpCounters counters_from_json(const ordered_json& j) {
  OpCounters c;
  c.insert_evolves = j.at("insert_evolves");
  c.lookup_evolves = j.at("lookup_evolves");
  c.evolve_skips = j.at("evolve_skips");
  c.compressions = j.at("compressions");
  c.decompressions = j.at("decompressions");
  c.rebuilds = j.at("rebuilds");
  c.chain_creations = j.at("chain_creations");
  c.compress_bytes_before = j.at("compress_bytes_before");
  c.compress_bytes_after = j.at("compress_bytes_after");
  return c;
}

ordered_json latency_to_json(const LatencyStats& l) {
  return ordered_json{{"p50_ns", l.p50_ns},
                      {"p99_ns", l.p99_ns},
                      {"p999_ns", l.p999_ns},
                      {"samples", l.samples}};
}

LatencyStats latency_from_json(const ordered_json& j) {
  return {j.at("p50_ns"), j.at("p99_ns"), j.at("p999_ns"), j.at("samples")};
}

ordered_json config_to_json(const EvolveConfig& c) {
  return ordered_json{{"alpha", c.alpha},
                      {"beta", c.beta},
                      {"theta", c.theta},
                      {"lambda", c.lambda},
                      {"p_hl", c.p_hl},
                      {"epsilon_divisor", c.epsilon_divisor},
                      {"cooling_probability", c.cooling_probability},
                      {"max_evolve_keys", c.max_evolve_keys},
                      {"index_size_cap", c.index_size_cap},
                      {"pla_epsilon", c.pla_epsilon},
                      {"initial_speed", c.initial_speed},
                      {"flatten_segments", c.flatten_segments},
                      {"read_evolving", c.read_evolving_enabled},
                      {"lookup_sample_period", c.lookup_sample_period},
                      {"adaptive_expansion", c.adaptive_expansion},
                      {"upsert", c.upsert_values},
                      {"stats_mode", to_string(c.stats_mode)},
                      {"seed", c.rng_seed}};
}

EvolveConfig config_from_json(const ordered_json& j) {
  EvolveConfig c;
  c.alpha = j.at("alpha");
  c.beta = j.at("beta");
  c.theta = j.at("theta");
  c.lambda = j.at("lambda");
  c.p_hl = j.at("p_hl");
  c.epsilon_divisor = j.at("epsilon_divisor");
  c.cooling_probability = j.at("cooling_probability");
  c.max_evolve_keys = j.at("max_evolve_keys");
  c.index_size_cap = j.at("index_size_cap");
  c.pla_epsilon = j.at("pla_epsilon");
  c.initial_speed = j.at("initial_speed");
  c.flatten_segments = j.at("flatten_segments");
  c.read_evolving_enabled = j.at("read_evolving");
  c.lookup_sample_period = j.at("lookup_sample_period");
  c.adaptive_expansion = j.at("adaptive_expansion");
  c.upsert_values = j.at("upsert");
  c.stats_mode = stats_mode_from_string(j.at("stats_mode"));
  c.rng_seed = j.at("seed");
  return c;
}

ordered_json repeat_to_json(const RepeatResult& r) {
  return ordered_json{{"throughput_mops", r.throughput_mops},
                      {"elapsed_s", r.elapsed_s},
                      {"latency", latency_to_json(r.latency)},
                      {"stats_before", stats_to_json(r.stats_before)},
                      {"stats_after", stats_to_json(r.stats_after)},
                      {"counters", counters_to_json(r.counters)},
                      {"stat_writes", r.stat_writes},
                      {"found", r.found},
                      {"notfound", r.notfound},
                      {"duplicates", r.duplicates},
                      {"ops_executed", r.ops_executed}};
}

RepeatResult repeat_from_json(const ordered_json& j) {
  RepeatResult r;
  r.throughput_mops = j.at("throughput_mops");
  r.elapsed_s = j.at("elapsed_s");
  r.latency = latency_from_json(j.at("latency"));
  r.stats_before = stats_from_json(j.at("stats_before"));
  r.stats_after = stats_from_json(j.at("stats_after"));
  r.counters = counters_from_json(j.at("counters"));
  r.stat_writes = j.at("stat_writes");
  r.found = j.at("found");
  r.notfound = j.at("notfound");
  r.duplicates = j.at("duplicates");
  r.ops_executed = j.at("ops_executed");
  return r;
}

}  // namespace

std::string report_to_json(const RunReport& r) {
  ordered_json j{{"workload", to_string(r.spec.kind)},
                 {"dataset", r.dataset},
                 {"n", r.spec.n},
                 {"threads", r.spec.threads},
                 {"seed", r.spec.seed},
                 {"op_count", r.spec.op_count},
                 {"repeat_count", r.spec.repeats},
                 {"git_rev", r.git_rev},
                 {"config", config_to_json(r.config)},
                 {"throughput_mops", r.throughput_mops},
                 {"latency", latency_to_json(r.latency)},
                 {"repeats", ordered_json::array()}};
  for (const auto& rep : r.repeats) j["repeats"].push_back(repeat_to_json(rep));
  return j.dump(2) + "\n";
}

RunReport report_from_json(const std::string& text) {
  const ordered_json j = ordered_json::parse(text);
  RunReport r;
  r.spec.kind = workload_from_string(j.at("workload"));
  r.dataset = j.at("dataset");
  r.spec.dataset = r.dataset;
  r.spec.n = j.at("n");
  r.spec.threads = j.at("threads");
  r.spec.seed = j.at("seed");
  r.spec.op_count = j.at("op_count");
  r.spec.repeats = j.at("repeat_count");
  r.git_rev = j.at("git_rev");
  r.config = config_from_json(j.at("config"));
  r.throughput_mops = j.at("throughput_mops");
  r.latency = latency_from_json(j.at("latency"));
  for (const auto& rep : j.at("repeats")) r.repeats.push_back(repeat_from_json(rep));
  return r;
}

std::string report_to_csv(const RunReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "workload,dataset,n,threads,seed,stats_mode,repeat,throughput_mops,elapsed_s,"
         "p50_ns,p99_ns,p999_ns,latency_samples,entries_before,entries_after,nodes_after,"
         "max_depth_after,avg_depth_after,bytes_total_after,insert_evolves,lookup_evolves,"
         "evolve_skips,compressions,decompressions,chain_creations,stat_writes,found,"
         "notfound,duplicates,ops_executed\n";
  auto row = [&](const std::string& label, const RepeatResult& rr) {
    out << to_string(r.spec.kind) << ',' << r.dataset << ',' << r.spec.n << ','
        << r.spec.threads << ',' << r.spec.seed << ',' << to_string(r.config.stats_mode) << ','
        << label << ',' << rr.throughput_mops << ',' << rr.elapsed_s << ',' << rr.latency.p50_ns
        << ',' << rr.latency.p99_ns << ',' << rr.latency.p999_ns << ',' << rr.latency.samples
        << ',' << rr.stats_before.entry_count << ',' << rr.stats_after.entry_count << ','
        << rr.stats_after.node_count << ',' << rr.stats_after.max_depth << ','
        << rr.stats_after.avg_depth << ',' << rr.stats_after.bytes_total << ','
        << rr.counters.insert_evolves << ',' << rr.counters.lookup_evolves << ','
        << rr.counters.evolve_skips << ',' << rr.counters.compressions << ','
        << rr.counters.decompressions << ',' << rr.counters.chain_creations << ','
        << rr.stat_writes << ',' << rr.found << ',' << rr.notfound << ',' << rr.duplicates
        << ',' << rr.ops_executed << '\n';
  };
  for (std::size_t i = 0; i < r.repeats.size(); ++i) row(std::to_string(i), r.repeats[i]);
  RepeatResult agg;
  agg.throughput_mops = r.throughput_mops;
  agg.latency = r.latency;
  if (!r.repeats.empty()) {
    agg.stats_before = r.repeats.back().stats_before;
    agg.stats_after = r.repeats.back().stats_after;
    agg.counters = r.repeats.back().counters;
    agg.stat_writes = r.repeats.back().stat_writes;
    agg.found = r.repeats.back().found;
    agg.notfound = r.repeats.back().notfound;
    agg.duplicates = r.repeats.back().duplicates;
    agg.ops_executed = r.repeats.back().ops_executed;
    agg.elapsed_s = r.repeats.back().elapsed_s;
  }
  row("aggregate", agg);
  return out.str();
}

void emit_report(const RunReport& report, const std::string& format, const std::string& path) {
  std::string text;
  if (format == "json") text = report_to_json(report);
  else if (format == "csv") text = report_to_csv(report);
  else throw std::invalid_argument("unknown report format: " + format);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

bool operator==(const LatencyStats& a, const LatencyStats& b) {
  return a.p50_ns == b.p50_ns && a.p99_ns == b.p99_ns && a.p999_ns == b.p999_ns &&
         a.samples == b.samples;
}

bool operator==(const RepeatResult& a, const RepeatResult& b) {
  auto stats_eq = [](const IndexStats& x, const IndexStats& y) {
    return x.entry_count == y.entry_count && x.node_count == y.node_count &&
           x.max_depth == y.max_depth && x.avg_depth == y.avg_depth &&
           x.bytes_internal == y.bytes_internal && x.bytes_total == y.bytes_total;
  };
  auto counters_eq = [](const OpCounters& x, const OpCounters& y) {
    return x.insert_evolves == y.insert_evolves && x.lookup_evolves == y.lookup_evolves &&
           x.evolve_skips == y.evolve_skips && x.compressions == y.compressions &&
           x.decompressions == y.decompressions && x.rebuilds == y.rebuilds &&
           x.chain_creations == y.chain_creations &&
           x.compress_bytes_before == y.compress_bytes_before &&
           x.compress_bytes_after == y.compress_bytes_after;
  };
  return a.throughput_mops == b.throughput_mops && a.elapsed_s == b.elapsed_s &&
         a.latency == b.latency && stats_eq(a.stats_before, b.stats_before) &&
         stats_eq(a.stats_after, b.stats_after) && counters_eq(a.counters, b.counters) &&
         a.stat_writes == b.stat_writes && a.found == b.found && a.notfound == b.notfound &&
         a.duplicates == b.duplicates && a.ops_executed == b.ops_executed;
}

bool operator==(const RunReport& a, const RunReport& b) {
  auto config_eq = [](const EvolveConfig& x, const EvolveConfig& y) {
    return x.alpha == y.alpha && x.beta == y.beta && x.theta == y.theta &&
           x.lambda == y.lambda && x.p_hl == y.p_hl && x.epsilon_divisor == y.epsilon_divisor &&
           x.cooling_probability == y.cooling_probability &&
           x.max_evolve_keys == y.max_evolve_keys && x.index_size_cap == y.index_size_cap &&
           x.pla_epsilon == y.pla_epsilon && x.initial_speed == y.initial_speed &&
           x.flatten_segments == y.flatten_segments &&
           x.read_evolving_enabled == y.read_evolving_enabled &&
           x.lookup_sample_period == y.lookup_sample_period &&
           x.adaptive_expansion == y.adaptive_expansion && x.upsert_values == y.upsert_values &&
           x.stats_mode == y.stats_mode && x.rng_seed == y.rng_seed;
  };
  if (!(a.spec.kind == b.spec.kind && a.spec.n == b.spec.n && a.spec.threads == b.spec.threads &&
        a.spec.seed == b.spec.seed && a.spec.op_count == b.spec.op_count &&
        a.spec.repeats == b.spec.repeats))
    return false;
  if (!(a.dataset == b.dataset && a.git_rev == b.git_rev)) return false;
  if (!config_eq(a.config, b.config)) return false;
  if (!(a.throughput_mops == b.throughput_mops && a.latency == b.latency)) return false;
  return a.repeats == b.repeats;
}

}  // namespace sali::bench
