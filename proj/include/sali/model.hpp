#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>

namespace sali {

using Key = std::uint64_t;
using Value = std::uint64_t;

#define SALI_ASSERT(expr)                                                        \
  do {                                                                           \
    if (!(expr)) {                                                               \
      std::fprintf(stderr, "SALI_ASSERT failed at %s:%d: %s\n", __FILE__,        \
                   __LINE__, #expr);                                             \
      std::abort();                                                              \
    }                                                                            \
  } while (0)

// One straight-line segment of the key CDF: position = slope * key + intercept.
// long double keeps 64-bit keys exactly representable in the mantissa.
struct LinearModel {
  long double slope = 0.0L;
  long double intercept = 0.0L;

  // Predicted slot, clamped to [0, num_slots - 1]. Monotone in key.
  std::size_t predict(Key key, std::size_t num_slots) const {
    const long double pos = slope * static_cast<long double>(key) + intercept;
    if (!(pos > 0.0L)) return 0;
    const auto i = static_cast<std::size_t>(pos);
    return i >= num_slots ? num_slots - 1 : i;
  }
};

}  // namespace sali
