#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mixlab {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to decorrelate derived stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives independent named streams from one master seed. Each stream is a
/// pure function of (master, name, index), so drawing from one stream never
/// shifts the draws of another.
class SeedTree {
 public:
  explicit SeedTree(std::uint64_t master) : master_(master) {}

  std::uint64_t master() const { return master_; }

  std::uint64_t derive(std::string_view name, std::uint64_t index = 0) const {
    return splitmix64(splitmix64(master_ ^ fnv1a64(name)) + index);
  }

  Rng stream(std::string_view name, std::uint64_t index = 0) const {
    return Rng(derive(name, index));
  }

  SeedTree child(std::string_view name) const { return SeedTree(derive(name)); }

 private:
  std::uint64_t master_;
};

}  // namespace mixlab
