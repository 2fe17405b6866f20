#include "bench/dataset.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "sali/rng.hpp"

namespace sali::bench {
namespace {

std::vector<Key> gen_easy(std::size_t n, SplitMix64& rng) {
  std::unordered_set<Key> seen;
  seen.reserve(n * 2);
  std::vector<Key> out;
  out.reserve(n);
  while (out.size() < n) {
    const Key k = rng.next();
    if (seen.insert(k).second) out.push_back(k);
  }
  return out;
}

// Clustered keys with log-normal spread around a handful of centers: local
// density varies over many orders of magnitude, which no small set of linear
// segments fits well.
std::vector<Key> gen_hard(std::size_t n, SplitMix64& rng) {
  constexpr int kClusters = 6;
  struct Cluster {
    Key center;
    double sigma;
  };
  std::vector<Cluster> clusters;
  clusters.reserve(kClusters);
  for (int c = 0; c < kClusters; ++c)
    clusters.push_back({rng.next() >> 1, 2.0 + 3.0 * rng.next_double()});

  std::unordered_set<Key> seen;
  seen.reserve(n * 2);
  std::vector<Key> out;
  out.reserve(n);
  while (out.size() < n) {
    const Cluster& cl = clusters[rng.next_below(kClusters)];
    const double u1 = rng.next_double();
    const double u2 = rng.next_double();
    const double z =
        std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(6.283185307179586 * u2);
    const double mag = std::exp(cl.sigma * z + 8.0);
    const Key off = static_cast<Key>(std::min(mag, 9.0e18));
    const Key k = (rng.next() & 1) ? cl.center + off : cl.center - off;
    if (seen.insert(k).second) out.push_back(k);
  }
  return out;
}

std::vector<Key> load_file(const std::string& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::unordered_set<Key> seen;
  std::vector<Key> out;
  std::uint64_t v;
  while (out.size() < n && in >> v)
    if (seen.insert(v).second) out.push_back(v);
  if (in.bad()) throw std::runtime_error("read error on dataset file: " + path);
  if (out.empty()) throw std::runtime_error("dataset file holds no keys: " + path);
  return out;
}

}  // namespace

Dataset generate_dataset(const std::string& name, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("dataset size must be >= 1");
  Dataset d;
  d.name = name;
  SplitMix64 rng = SplitMix64::split(seed, 0x9a75);
  if (name == "easy") {
    d.difficulty = Difficulty::Easy;
    d.keys = gen_easy(n, rng);
  } else if (name == "hard") {
    d.difficulty = Difficulty::Hard;
    d.keys = gen_hard(n, rng);
  } else if (name.rfind("file:", 0) == 0) {
    d.difficulty = Difficulty::External;
    d.keys = load_file(name.substr(5), n);
  } else {
    throw std::invalid_argument("unknown dataset: " + name + " (easy|hard|file:PATH)");
  }
  return d;
}

}  // namespace sali::bench
