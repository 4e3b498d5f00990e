#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace dcml {

// splitmix64; used to derive independent seed streams from one run seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(mix_seed(seed, stream));
}

// Uniform integer in [0, n). n must be > 0.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// k distinct values from items, by partial Fisher-Yates. Order is the draw
// order, so results are reproducible across platforms.
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> items, std::size_t k, Rng& rng) {
  if (k > items.size()) k = items.size();
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + uniform_index(rng, items.size() - i);
    std::swap(items[i], items[j]);
  }
  items.resize(k);
  return items;
}

template <typename T>
void shuffle_in_place(std::vector<T>& items, Rng& rng) {
  if (items.empty()) return;
  for (std::size_t i = items.size() - 1; i > 0; --i) {
    const std::size_t j = uniform_index(rng, i + 1);
    std::swap(items[i], items[j]);
  }
}

}  // namespace dcml
