#ifndef LMR_RNG_HPP
#define LMR_RNG_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <string_view>

namespace lmr {

using Rng = std::mt19937_64;

namespace seed_tag {
inline constexpr std::uint64_t kStart = 0x01;
inline constexpr std::uint64_t kEstep = 0x02;
inline constexpr std::uint64_t kFinalEstep = 0x03;
inline constexpr std::uint64_t kMarglik = 0x04;
inline constexpr std::uint64_t kInit = 0x05;
inline constexpr std::uint64_t kReplication = 0x06;
}  // namespace seed_tag

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Named sub-stream: all randomness in the library flows from one master seed
// through derive_seed so parallel and serial schedules draw identical streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ (tag * 0xd6e8feb86659fd93ULL)) + index);
}

// Stable per-cluster stream keyed by the cluster label, not its position, so
// reordering clusters does not change any cluster's draws.
inline std::uint64_t cluster_seed(std::uint64_t seed, std::string_view cluster_id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : cluster_id) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ h);
}

// Deterministic work sharing: results are indexed by task, reductions are done
// by the caller in index order, so the thread count never changes output.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

}  // namespace lmr

#endif
