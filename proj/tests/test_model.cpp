#include <doctest.h>

#include "sali/build.hpp"
#include "sali/model.hpp"
#include "sali/rng.hpp"
#include "sali/validate.hpp"

using namespace sali;

TEST_CASE("predict: constant model lands on its intercept slot") {
  LinearModel m{0.0L, 3.0L};
  CHECK(m.predict(0, 8) == 3);
  CHECK(m.predict(12345, 8) == 3);
  CHECK(m.predict(~0ull, 8) == 3);
}

TEST_CASE("predict: identity model") {
  LinearModel m{1.0L, 0.0L};
  CHECK(m.predict(5, 8) == 5);
  CHECK(m.predict(0, 8) == 0);
}

TEST_CASE("predict: clamps to the last slot") {
  LinearModel m{0.5L, 0.0L};
  CHECK(m.predict(15, 8) == 7);   // 7.5 -> 7
  CHECK(m.predict(200, 8) == 7);  // far out of range
}

TEST_CASE("predict: negative positions clamp to slot zero") {
  LinearModel m{1.0L, -100.0L};
  CHECK(m.predict(3, 8) == 0);
}

TEST_CASE("predict: monotone in the key") {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    LinearModel m;
    m.slope = rng.next_double() * 4.0;
    m.intercept = (rng.next_double() - 0.5) * 100.0;
    const std::size_t slots = 1 + rng.next_below(1000);
    Key prev_key = 0;
    std::size_t prev_slot = m.predict(0, slots);
    for (int step = 0; step < 50; ++step) {
      const Key k = prev_key + 1 + rng.next_below(1u << 20);
      const std::size_t s = m.predict(k, slots);
      CHECK(s >= prev_slot);
      prev_key = k;
      prev_slot = s;
    }
  }
}

TEST_CASE("validate_node: fresh build over {0,10,20} is clean") {
  EvolveConfig cfg;
  const Key keys[] = {0, 10, 20};
  const Value vals[] = {1, 2, 3};
  BuildRequest req;
  req.keys = keys;
  req.values = vals;
  req.target_slots = 8;
  std::unique_ptr<Node> node(build_node(req, cfg));
  CHECK(validate_node(*node).empty());
  CHECK(validate_tree(*node).empty());
}

TEST_CASE("validate_node: an entry parked at the wrong slot is reported") {
  EvolveConfig cfg;
  const Key keys[] = {0, 10, 20};
  const Value vals[] = {1, 2, 3};
  BuildRequest req;
  req.keys = keys;
  req.values = vals;
  req.target_slots = 8;
  std::unique_ptr<Node> node(build_node(req, cfg));
  Segment& seg = node->segs[0];
  // move one entry to a wrong slot by hand
  std::uint32_t src = 0;
  for (std::uint32_t i = 0; i < seg.num_slots; ++i)
    if (seg.slots[i].read().tag == Slot::kEntry) {
      src = i;
      break;
    }
  const auto snap = seg.slots[src].read();
  std::uint32_t dst = (src + 1) % seg.num_slots;
  while (seg.slots[dst].read().tag != Slot::kGap) dst = (dst + 1) % seg.num_slots;
  seg.slots[dst].init_entry(snap.key, snap.payload);
  seg.slots[src].tag.store(Slot::kGap, std::memory_order_relaxed);
  const auto violations = validate_node(*node);
  CHECK(violations.size() == 1);
  CHECK(violations[0].slot == dst);
}
