#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sali/model.hpp"

namespace sali::bench {

enum class Difficulty : std::uint8_t { Easy, Hard, External };

struct Dataset {
  std::string name;
  Difficulty difficulty = Difficulty::Easy;
  std::vector<Key> keys;  // unique, in generation order
};

// name is "easy", "hard" or "file:PATH". Synthetic generators are
// deterministic under (name, n, seed); file datasets read newline-delimited
// unsigned integers and deduplicate. Throws std::runtime_error on io errors.
Dataset generate_dataset(const std::string& name, std::size_t n, std::uint64_t seed);

}  // namespace sali::bench
