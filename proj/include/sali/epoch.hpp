#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

namespace sali {

// Epoch-based reclamation. Subtrees displaced by an evolve are retired here
// and freed once every thread that could still hold a reference has left its
// read-side critical section. Three limbo bags per thread, recycled lazily by
// their owner: a bag whose slot index comes around again is at least two
// epochs old and therefore unreachable.
class EpochDomain {
 public:
  static constexpr std::uint64_t kIdle = ~std::uint64_t{0};

  struct Rec {
    std::atomic<std::uint64_t> epoch{kIdle};
    struct Retired {
      void* p;
      void (*del)(void*);
    };
    std::array<std::vector<Retired>, 3> bags;
    std::array<std::uint64_t, 3> bag_epoch{kIdle, kIdle, kIdle};
    std::uint64_t retire_tally = 0;
  };

  EpochDomain() = default;
  EpochDomain(const EpochDomain&) = delete;
  EpochDomain& operator=(const EpochDomain&) = delete;

  ~EpochDomain() {
    // No threads may be active here; drain everything.
    for (auto& rec : recs_)
      for (auto& bag : rec->bags) drain(bag);
  }

  Rec* register_thread() {
    std::lock_guard<std::mutex> g(mu_);
    recs_.push_back(std::make_unique<Rec>());
    return recs_.back().get();
  }

  class Guard {
   public:
    Guard(EpochDomain& d, Rec& r) : rec_(r) {
      // seq_cst: the announcement must be ordered before any shared loads,
      // or an advancing thread could miss us and free what we are reading.
      rec_.epoch.store(d.global_.load(std::memory_order_acquire), std::memory_order_seq_cst);
    }
    ~Guard() { rec_.epoch.store(kIdle, std::memory_order_release); }
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;

   private:
    Rec& rec_;
  };

  void retire(Rec& rec, void* p, void (*del)(void*)) {
    const std::uint64_t g = global_.load(std::memory_order_acquire);
    auto& bag = rec.bags[g % 3];
    if (rec.bag_epoch[g % 3] != g) {
      drain(bag);  // previous occupants are >= 2 epochs behind
      rec.bag_epoch[g % 3] = g;
    }
    bag.push_back({p, del});
    if (++rec.retire_tally % 64 == 0) try_advance();
  }

  void try_advance() {
    const std::uint64_t g = global_.load(std::memory_order_acquire);
    {
      std::lock_guard<std::mutex> lk(mu_);
      for (const auto& rec : recs_) {
        const std::uint64_t e = rec->epoch.load(std::memory_order_acquire);
        if (e != kIdle && e != g) return;
      }
    }
    std::uint64_t expect = g;
    global_.compare_exchange_strong(expect, g + 1, std::memory_order_acq_rel);
  }

  std::uint64_t global_epoch() const { return global_.load(std::memory_order_acquire); }

 private:
  static void drain(std::vector<Rec::Retired>& bag) {
    for (auto& r : bag) r.del(r.p);
    bag.clear();
  }

  std::atomic<std::uint64_t> global_{0};
  std::mutex mu_;
  std::vector<std::unique_ptr<Rec>> recs_;
};

}  // namespace sali
