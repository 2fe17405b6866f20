#include <doctest.h>

#include <cmath>

#include "sali/prob.hpp"
#include "sali/rng.hpp"

using namespace sali;

namespace {
constexpr double kRelTol = 1e-12;
bool rel_eq(double a, double b) { return std::fabs(a - b) <= kRelTol * std::max(std::fabs(a), std::fabs(b)); }
}  // namespace

TEST_CASE("p_conflict: direct evaluation and clamp") {
  EvolveConfig cfg;  // alpha = 0.1, beta = 2
  CHECK(rel_eq(p_conflict(1000, cfg), 0.01));
  CHECK(p_conflict(5, cfg) == 1.0);  // 1/0.5 clamps
  // pre-clamp identity: p * (alpha*(beta-1)*n) == 1
  for (std::uint64_t n : {11ull, 100ull, 12345ull, 1000000ull}) {
    const double p = p_conflict(n, cfg);
    CHECK(rel_eq(p * (cfg.alpha * (cfg.beta - 1.0) * static_cast<double>(n)), 1.0));
  }
}

TEST_CASE("p_acc: direct evaluation of the cumulative model") {
  EvolveConfig cfg;  // beta = 2, epsilon_divisor = 1000
  NodeMeta meta;
  meta.build_num = 100;
  meta.build_time = 1000;
  meta.speed = 1.0;
  meta.depth_hint = 2;
  CHECK(rel_eq(p_acc(meta, 1050, cfg), (50.0 + 0.002) / 100.0));  // 0.50002
}

TEST_CASE("p_acc: the depth term keeps a zero-speed node alive") {
  EvolveConfig cfg;
  NodeMeta meta;
  meta.build_num = 100;
  meta.build_time = 500;
  meta.speed = 0.0;
  meta.depth_hint = 2;
  const double p = p_acc(meta, 500, cfg);
  CHECK(p > 0.0);
  CHECK(rel_eq(p, 0.002 / 100.0));
}

TEST_CASE("p_acc: clamps at certainty") {
  EvolveConfig cfg;
  NodeMeta meta;
  meta.build_num = 10;
  meta.build_time = 0;
  meta.speed = 1.0;
  meta.depth_hint = 1;
  CHECK(p_acc(meta, 1000, cfg) == 1.0);  // speed*elapsed = 1000 >= 10
}

TEST_CASE("update_speed: quotient of gained keys over elapsed ticks") {
  NodeMeta meta;
  meta.build_num = 100;
  meta.build_time = 0;
  meta.speed = 7.0;
  CHECK(update_speed(meta, 300, 100) == 2.0);
  CHECK(update_speed(meta, 100, 100) == 0.0);
  CHECK(update_speed(meta, 300, 0) == 7.0);  // degenerate elapsed keeps the old estimate
}

TEST_CASE("on_conflict: both trials must succeed") {
  EvolveConfig cfg;
  Node node;
  node.meta.build_num = 2;  // p_conflict clamps to 1
  node.meta.build_time = 0;
  node.meta.speed = 100.0;  // p_acc clamps to 1
  node.meta.depth_hint = 1;
  SplitMix64 rng(3);
  const TriggerDecision d = on_conflict(node, 1'000'000, rng, cfg);
  CHECK(d.evolve);
  CHECK(d.cause == EvolveCause::InsertEvolve);
}

TEST_CASE("on_conflict: a failed first trial never samples the second") {
  EvolveConfig cfg;
  cfg.alpha = 1.0;
  Node node;
  node.meta.build_num = 1u << 20;  // p_conflict tiny: first draw virtually always fails
  node.meta.speed = 1e9;           // p_acc would be 1 if it were sampled
  node.meta.build_time = 0;
  SplitMix64 a(99), b(99);
  const TriggerDecision d = on_conflict(node, 1000, a, cfg);
  CHECK_FALSE(d.evolve);
  b.next_double();  // exactly one draw consumed
  CHECK(a.next() == b.next());
}

TEST_CASE("on_conflict: geometric trigger expectation (Monte Carlo)") {
  EvolveConfig cfg;
  Node node;
  node.meta.build_num = 1000;  // p_conflict = 0.01
  node.meta.speed = 1e9;       // p_acc = 1
  node.meta.build_time = 0;
  SplitMix64 rng(4242);
  const int runs = 100'000;
  std::uint64_t total_trials = 0;
  for (int r = 0; r < runs; ++r) {
    std::uint64_t trials = 0;
    for (;;) {
      ++trials;
      if (on_conflict(node, 1000, rng, cfg).evolve) break;
    }
    total_trials += trials;
  }
  const double mean = static_cast<double>(total_trials) / runs;
  CHECK(mean >= 95.0);
  CHECK(mean <= 105.0);
}

TEST_CASE("sample_hot_lookup: no draw before the period wraps") {
  EvolveConfig cfg;
  cfg.p_hl = 1.0;
  Node node;
  node.meta.build_num = 1;
  node.meta.speed = 1e9;
  ThreadLocalSampler tls;
  SplitMix64 a(5), b(5);
  for (int i = 0; i < 9; ++i) {
    const TriggerDecision d = sample_hot_lookup(tls, node, 100, a, cfg);
    CHECK_FALSE(d.evolve);
  }
  CHECK(a.next() == b.next());  // rng untouched through nine lookups
}

TEST_CASE("sample_hot_lookup: tenth lookup with forced probabilities evolves") {
  EvolveConfig cfg;
  cfg.p_hl = 1.0;
  cfg.epsilon_divisor = 1e-9;  // depth term alone pushes p_acc to 1
  Node node;
  node.meta.build_num = 1;
  node.meta.depth_hint = 1;
  ThreadLocalSampler tls;
  SplitMix64 rng(5);
  TriggerDecision d;
  for (int i = 0; i < 10; ++i) d = sample_hot_lookup(tls, node, 100, rng, cfg);
  CHECK(d.evolve);
  CHECK(d.cause == EvolveCause::LookupEvolve);
  CHECK(tls.skip_counter == 0);
}

TEST_CASE("effective_p_hl: lookup-evolved nodes pay the lambda penalty") {
  EvolveConfig cfg;
  cfg.p_hl = 0.5;
  cfg.lambda = 0.1;
  Node fresh;
  fresh.meta.last_evolve_cause = EvolveCause::Build;
  Node read_evolved;
  read_evolved.meta.last_evolve_cause = EvolveCause::LookupEvolve;
  CHECK(effective_p_hl(fresh, cfg) == 0.5);
  CHECK(rel_eq(effective_p_hl(read_evolved, cfg), 0.05));
  // monotonicity: penalty never raises the probability
  SplitMix64 rng(8);
  for (int i = 0; i < 100; ++i) {
    cfg.p_hl = rng.next_double();
    if (cfg.p_hl <= 0) continue;
    cfg.lambda = rng.next_double() * 0.999 + 1e-9;
    CHECK(effective_p_hl(read_evolved, cfg) <= cfg.p_hl);
    CHECK(effective_p_hl(read_evolved, cfg) < cfg.p_hl);
    CHECK(effective_p_hl(fresh, cfg) == cfg.p_hl);
  }
}

TEST_CASE("expansion_gamma: size tiers") {
  EvolveConfig cfg;  // theta = 1
  CHECK(expansion_gamma(50'000, cfg) == 5.0);
  CHECK(expansion_gamma(100'000, cfg) == 2.0);
  CHECK(expansion_gamma(999'999, cfg) == 2.0);
  CHECK(expansion_gamma(1'000'000, cfg) == 1.0);
}

TEST_CASE("compute_expand_size: rising and falling rate branches") {
  EvolveConfig cfg;  // theta = 1
  NodeMeta meta;
  meta.build_num = 50'000;
  meta.speed = 3.0;
  CHECK(compute_expand_size(meta, 1.0, cfg) == 750'000);  // 5 * 3 * 50000
  meta.speed = 0.5;
  CHECK(compute_expand_size(meta, 1.0, cfg) == 250'000);  // ratio < 1 keeps gamma * n
  meta.speed = 3.0;
  CHECK(compute_expand_size(meta, 0.0, cfg) == 250'000);  // undefined previous rate -> ratio 1
  cfg.adaptive_expansion = false;
  CHECK(compute_expand_size(meta, 1.0, cfg) == 250'000);  // pinned ratio
}

TEST_CASE("compute_expand_size: monotone in ratio and build_num") {
  EvolveConfig cfg;
  NodeMeta meta;
  meta.build_num = 1'000;
  std::uint64_t prev = 0;
  for (double speed = 1.0; speed <= 8.0; speed += 0.5) {
    meta.speed = speed;
    const std::uint64_t e = compute_expand_size(meta, 1.0, cfg);
    CHECK(e >= prev);
    prev = e;
  }
  meta.speed = 2.0;
  prev = 0;
  for (std::uint64_t n = 100; n <= 10'000; n *= 2) {
    meta.build_num = n;
    const std::uint64_t e = compute_expand_size(meta, 1.0, cfg);
    CHECK(e >= prev);
    prev = e;
  }
}
