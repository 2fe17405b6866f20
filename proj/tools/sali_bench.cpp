// Benchmark driver: generates a dataset, runs one workload against the index
// under T threads, and writes the metrics report.
//
//   sali_bench bench --workload=write-only --dataset=hard --n=1000000 \
//       --threads=8 --stats-mode=prob --seed=7 --out=run.json --format=json

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "bench/report.hpp"
#include "bench/workload.hpp"
#include "sali/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"SALI benchmark harness"};
  app.require_subcommand(1);

  CLI::App* bench = app.add_subcommand("bench", "run one workload and emit a report");
  std::string workload = "balanced";
  std::string dataset = "easy";
  std::size_t n = 1'000'000;
  unsigned threads = 1;
  std::size_t ops = 0;
  unsigned repeats = 5;
  std::string out_path;
  std::string format = "json";
  std::string stats_mode = "prob";
  std::string read_evolving = "off";
  sali::EvolveConfig cfg;

  bench->set_config("--config", "", "key=value config file mirroring these flags");
  bench->add_option("--workload", workload,
                    "read-only|read-intensive|balanced|write-only|hot-read-a|hot-read-b|hot-write");
  bench->add_option("--dataset", dataset, "easy|hard|file:PATH");
  bench->add_option("--n", n, "dataset size in keys");
  bench->add_option("--threads", threads, "worker threads");
  bench->add_option("--ops", ops, "op count override (0 = workload default)");
  bench->add_option("--repeats", repeats, "repetitions (min/max dropped when >= 3)");
  bench->add_option("--out", out_path, "report path (default: stdout)");
  bench->add_option("--format", format, "csv|json");
  bench->add_option("--seed", cfg.rng_seed, "master RNG seed");
  bench->add_option("--stats-mode", stats_mode, "prob|counter|sampling|off");
  bench->add_option("--read-evolving", read_evolving, "on|off");
  bench->add_option("--size-cap-bytes", cfg.index_size_cap, "index size cap in bytes");
  bench->add_option("--pla-epsilon", cfg.pla_epsilon, "compression error bound");
  bench->add_option("--cooling-prob", cfg.cooling_probability, "cooling pool admission probability");
  bench->add_option("--alpha", cfg.alpha, "conflict tolerance");
  bench->add_option("--beta", cfg.beta, "accumulation tolerance");
  bench->add_option("--theta", cfg.theta, "expansion base factor");
  bench->add_option("--lambda", cfg.lambda, "repeat read-evolve penalty");
  bench->add_option("--p-hl", cfg.p_hl, "hot lookup trigger probability");
  bench->add_option("--epsilon-divisor", cfg.epsilon_divisor, "divisor in eps = depth/divisor");
  bench->add_option("--max-evolve-keys", cfg.max_evolve_keys, "evolve size cutoff");
  bench->add_option("--initial-speed", cfg.initial_speed, "speed of a fresh node");
  bench->add_option("--flatten-segments", cfg.flatten_segments, "segments per flattened slot");
  bench->add_option("--lookup-sample-period", cfg.lookup_sample_period,
                    "lookups per hot-read Bernoulli draw");
  bench->add_flag("--no-adaptive-expansion", [&cfg](std::int64_t) { cfg.adaptive_expansion = false; },
                  "pin the expansion speed ratio to 1");
  bench->add_flag("--upsert", [&cfg](std::int64_t) { cfg.upsert_values = true; },
                  "overwrite values of duplicate keys instead of rejecting");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    cfg.stats_mode = sali::stats_mode_from_string(stats_mode);
    if (read_evolving == "on") cfg.read_evolving_enabled = true;
    else if (read_evolving == "off") cfg.read_evolving_enabled = false;
    else throw std::invalid_argument("--read-evolving takes on|off");
    cfg.validate();

    sali::bench::WorkloadSpec spec;
    spec.kind = sali::bench::workload_from_string(workload);
    spec.dataset = dataset;
    spec.n = n;
    spec.threads = threads;
    spec.seed = cfg.rng_seed;
    spec.op_count = ops;
    spec.repeats = repeats;
    if (format != "csv" && format != "json")
      throw std::invalid_argument("--format takes csv|json");

    const sali::bench::RunReport report = sali::bench::run_workload(spec, cfg);
    if (out_path.empty()) {
      const std::string text = format == "json" ? sali::bench::report_to_json(report)
                                                : sali::bench::report_to_csv(report);
      std::fputs(text.c_str(), stdout);
    } else {
      sali::bench::emit_report(report, format, out_path);
    }
    std::fprintf(stderr, "%s/%s n=%zu threads=%u: %.3f Mops/s (p99.9 %.0f ns)\n",
                 workload.c_str(), dataset.c_str(), n, threads, report.throughput_mops,
                 report.latency.p999_ns);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
