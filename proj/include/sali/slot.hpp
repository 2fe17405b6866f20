#pragma once

#include <atomic>
#include <cstdint>
#include <thread>

#include "sali/model.hpp"

namespace sali {

inline void cpu_backoff(int spins) {
  if (spins < 16) {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_ia32_pause();
#endif
  } else {
    std::this_thread::yield();
  }
}

// A slot is the unit of write mutual exclusion. Its version word encodes:
//   bits 0..1  = 0 unlocked, 1 write-locked, 3 evolve-locked
//   bits 2..   = generation counter
//   all-ones   = dead: the slot belongs to a replaced subtree and will never
//                change again (content stays readable until reclamation)
//
// Readers never block on an evolve-locked slot: an evolve holds the lock for
// the whole collect/rebuild but mutates the content with a single atomic
// payload store (old child -> new child), so a snapshot taken under an
// evolve lock is always one of the two valid states. Ordinary write locks
// cover multi-word updates and are held only for a bounded instruction
// sequence; readers spin across them.
struct Slot {
  enum Tag : std::uint8_t { kGap = 0, kEntry = 1, kChild = 2 };
  static constexpr std::uint64_t kDead = ~std::uint64_t{0};

  std::atomic<std::uint64_t> version{0};
  std::atomic<std::uint8_t> tag{kGap};
  std::atomic<std::uint64_t> key{0};
  std::atomic<std::uint64_t> payload{0};

  struct Snapshot {
    std::uint8_t tag;
    Key key;
    std::uint64_t payload;
  };

  Snapshot read() const {
    for (int spins = 0;; ++spins) {
      const std::uint64_t v1 = version.load(std::memory_order_acquire);
      if ((v1 & 3u) == 3u) {  // evolve-locked or dead: stable modulo one payload swap
        Snapshot s{tag.load(std::memory_order_relaxed), key.load(std::memory_order_relaxed),
                   payload.load(std::memory_order_relaxed)};
        std::atomic_thread_fence(std::memory_order_acquire);
        return s;
      }
      if (v1 & 1u) {
        cpu_backoff(spins);
        continue;
      }
      Snapshot s{tag.load(std::memory_order_relaxed), key.load(std::memory_order_relaxed),
                 payload.load(std::memory_order_relaxed)};
      std::atomic_thread_fence(std::memory_order_acquire);
      if (version.load(std::memory_order_relaxed) == v1) return s;
      cpu_backoff(spins);
    }
  }

  // Write lock for entry/chain updates. Returns false iff the slot is dead,
  // in which case the caller must restart from the root.
  bool lock(std::uint64_t& token) {
    for (int spins = 0;; ++spins) {
      std::uint64_t v = version.load(std::memory_order_relaxed);
      if (v == kDead) return false;
      if (v & 1u) {
        cpu_backoff(spins);
        continue;
      }
      if (version.compare_exchange_weak(v, v + 1, std::memory_order_acquire,
                                        std::memory_order_relaxed)) {
        token = v + 1;
        return true;
      }
    }
  }

  void unlock(std::uint64_t token) { version.store(token + 3, std::memory_order_release); }

  // Evolve lock. Fails (without waiting) if another evolve owns the slot or
  // the slot is dead; waits out ordinary write locks.
  bool evolve_try_lock(std::uint64_t& token) {
    for (int spins = 0;; ++spins) {
      std::uint64_t v = version.load(std::memory_order_relaxed);
      if (v == kDead) return false;
      if ((v & 3u) == 3u) return false;
      if (v & 1u) {
        cpu_backoff(spins);
        continue;
      }
      if (version.compare_exchange_weak(v, v + 3, std::memory_order_acquire,
                                        std::memory_order_relaxed)) {
        token = v + 3;
        return true;
      }
    }
  }

  // Abandons an evolve without having changed the content.
  void evolve_abort(std::uint64_t token) {
    version.store(token - 3, std::memory_order_release);
  }

  void evolve_commit(std::uint64_t token) {
    version.store(token + 1, std::memory_order_release);
  }

  // Publishes a replacement subtree while evolve-locked. Single word, so
  // concurrent snapshot readers see either the old or the new child.
  void swap_child(void* new_child) {
    payload.store(reinterpret_cast<std::uint64_t>(new_child), std::memory_order_release);
  }

  // Freezes the slot forever. Caller must hold the write lock.
  void kill() { version.store(kDead, std::memory_order_release); }

  bool dead() const { return version.load(std::memory_order_acquire) == kDead; }

  // Pre-publication initialization (single-threaded).
  void init_entry(Key k, Value v) {
    tag.store(kEntry, std::memory_order_relaxed);
    key.store(k, std::memory_order_relaxed);
    payload.store(v, std::memory_order_relaxed);
  }
  void init_child(void* child) {
    tag.store(kChild, std::memory_order_relaxed);
    payload.store(reinterpret_cast<std::uint64_t>(child), std::memory_order_relaxed);
  }
};

static_assert(sizeof(Slot) == 32);

}  // namespace sali
