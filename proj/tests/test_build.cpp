#include <doctest.h>

#include <map>
#include <set>
#include <vector>

#include "sali/build.hpp"
#include "sali/rng.hpp"
#include "sali/validate.hpp"

using namespace sali;

namespace {

struct TreeShape {
  std::uint64_t entries = 0;
  std::uint32_t max_depth = 0;
  std::vector<Key> in_order;
};

void walk(const Node& node, std::uint32_t depth, TreeShape& out) {
  out.max_depth = std::max(out.max_depth, depth);
  for (const auto& seg : node.segs)
    for (std::uint32_t i = 0; i < seg.num_slots; ++i) {
      const auto s = seg.slots[i].read();
      if (s.tag == Slot::kEntry) {
        ++out.entries;
        out.in_order.push_back(s.key);
      } else if (s.tag == Slot::kChild) {
        walk(*node_of(s.payload), depth + 1, out);
      }
    }
}

std::unique_ptr<Node> build(const std::vector<Key>& keys, std::uint64_t target,
                            const EvolveConfig& cfg) {
  std::vector<Value> vals(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) vals[i] = keys[i] + 1;
  BuildRequest req;
  req.keys = keys;
  req.values = vals;
  req.target_slots = target;
  return std::unique_ptr<Node>(build_node(req, cfg));
}

void delete_subtree(Node* n) {
  std::vector<Node*> all;
  for_each_node(n, [&](Node* x) { all.push_back(x); });
  for (Node* x : all)
    if (x != n) delete x;
}

struct SubtreeGuard {
  std::unique_ptr<Node> root;
  explicit SubtreeGuard(std::unique_ptr<Node> r) : root(std::move(r)) {}
  ~SubtreeGuard() { delete_subtree(root.get()); }
};

}  // namespace

TEST_CASE("choose_model: single key gets an in-range constant model") {
  const Key keys[] = {42};
  const LinearModel m = choose_model(keys, 8);
  const auto pos = m.predict(42, 8);
  CHECK(pos < 8);
  CHECK(eval_model(m, keys, 8).degree == 1);
}

TEST_CASE("choose_model: uniformly spaced keys admit a conflict-free fit") {
  std::vector<Key> keys;
  for (Key k = 0; k < 64; ++k) keys.push_back(k * 10);
  const LinearModel m = choose_model(keys, keys.size());
  CHECK(eval_model(m, keys, keys.size()).degree == 1);
}

TEST_CASE("choose_model: never worse than endpoint interpolation") {
  // the spec's {0,1,2,100} case plus randomized sets
  auto endpoint_degree = [](const std::vector<Key>& keys, std::size_t slots) {
    LinearModel m;
    m.slope = static_cast<long double>(slots - 1) /
              (static_cast<long double>(keys.back()) - static_cast<long double>(keys.front()));
    m.intercept = -m.slope * static_cast<long double>(keys.front());
    return eval_model(m, keys, slots).degree;
  };
  {
    const std::vector<Key> keys{0, 1, 2, 100};
    const LinearModel m = choose_model(keys, 4);
    CHECK(eval_model(m, keys, 4).degree <= endpoint_degree(keys, 4));
  }
  SplitMix64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::set<Key> set;
    const std::size_t n = 2 + rng.next_below(200);
    while (set.size() < n) set.insert(rng.next_below(1u << 16));
    std::vector<Key> keys(set.begin(), set.end());
    const std::size_t slots = n + rng.next_below(4 * n);
    const LinearModel m = choose_model(keys, slots);
    CHECK(eval_model(m, keys, slots).degree <= endpoint_degree(keys, slots));
  }
}

TEST_CASE("build_node: perfectly linear keys build flat with zero conflicts") {
  EvolveConfig cfg;
  auto node = build({0, 10, 20, 30}, 4, cfg);
  SubtreeGuard g(std::move(node));
  TreeShape shape;
  walk(*g.root, 1, shape);
  CHECK(shape.entries == 4);
  CHECK(shape.max_depth == 1);
  CHECK(validate_tree(*g.root).empty());
}

TEST_CASE("build_node: dense triple is placed precisely") {
  EvolveConfig cfg;
  auto node = build({1, 2, 3}, 4, cfg);
  SubtreeGuard g(std::move(node));
  TreeShape shape;
  walk(*g.root, 1, shape);
  CHECK(shape.entries == 3);
  CHECK(validate_tree(*g.root).empty());
}

TEST_CASE("build_node: two-cluster keys recurse and keep every entry") {
  EvolveConfig cfg;
  SplitMix64 rng(5);
  std::set<Key> set;
  while (set.size() < 500) set.insert(1'000'000 + rng.next_below(2'000));
  while (set.size() < 1000) set.insert(9'000'000'000ull + rng.next_below(2'000));
  std::vector<Key> keys(set.begin(), set.end());
  auto node = build(keys, default_build_slots(keys.size()), cfg);
  SubtreeGuard g(std::move(node));
  TreeShape shape;
  walk(*g.root, 1, shape);
  CHECK(shape.entries == 1000);
  CHECK(shape.max_depth >= 2);
  CHECK(std::is_sorted(shape.in_order.begin(), shape.in_order.end()));
  CHECK(validate_tree(*g.root).empty());
}

TEST_CASE("build_node: deterministic for identical requests") {
  EvolveConfig cfg;
  SplitMix64 rng(17);
  std::set<Key> set;
  while (set.size() < 400) set.insert(rng.next());
  std::vector<Key> keys(set.begin(), set.end());
  auto a = build(keys, default_build_slots(keys.size()), cfg);
  auto b = build(keys, default_build_slots(keys.size()), cfg);
  SubtreeGuard ga(std::move(a)), gb(std::move(b));
  // structural signature: (depth, slots, tag) per slot in traversal order
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint8_t, Key>> siga, sigb;
  auto signature = [](const Node& root, auto& sig) {
    auto rec = [&](auto&& self, const Node& n, std::uint32_t d) -> void {
      for (const auto& seg : n.segs)
        for (std::uint32_t i = 0; i < seg.num_slots; ++i) {
          const auto s = seg.slots[i].read();
          sig.emplace_back(d, seg.num_slots, s.tag, s.tag == Slot::kEntry ? s.key : 0);
          if (s.tag == Slot::kChild) self(self, *node_of(s.payload), d + 1);
        }
    };
    rec(rec, root, 1);
  };
  signature(*ga.root, siga);
  signature(*gb.root, sigb);
  CHECK(siga == sigb);
}

TEST_CASE("build_node: totality over random sorted sets") {
  EvolveConfig cfg;
  SplitMix64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    std::set<Key> set;
    const std::size_t n = 1 + rng.next_below(800);
    while (set.size() < n) set.insert(rng.next());
    std::vector<Key> keys(set.begin(), set.end());
    auto node = build(keys, default_build_slots(n), cfg);
    SubtreeGuard g(std::move(node));
    TreeShape shape;
    walk(*g.root, 1, shape);
    CHECK(shape.entries == n);
    CHECK(shape.in_order == keys);
    CHECK(validate_tree(*g.root).empty());
  }
}

TEST_CASE("build_node: empty input is rejected") {
  EvolveConfig cfg;
  BuildRequest req;
  req.target_slots = 4;
  CHECK_THROWS_AS(build_node(req, cfg), std::invalid_argument);
}
