#pragma once

#include <cstdint>
#include <random>

namespace collapse {

// A seeded random stream keyed by (root_seed, stream_index). Identical keys
// give identical draws; distinct stream indices are seeded through a
// full-avalanche mix, so streams used by different trials do not overlap in
// practice. Single-owner: do not share one stream across threads.
class RngStream {
 public:
  RngStream(std::uint64_t root_seed, std::uint64_t stream_index);

  std::uint64_t root_seed() const { return root_seed_; }
  std::uint64_t stream_index() const { return stream_index_; }

  // Child stream keyed by this stream's key and `child_index`. Children of the
  // same parent with different indices are independent of each other and of
  // the parent.
  RngStream split(std::uint64_t child_index) const;

  double normal();
  double uniform();  // [0, 1)
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::uint64_t root_seed_;
  std::uint64_t stream_index_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// SplitMix64 finalizer; exposed for tests.
std::uint64_t mix64(std::uint64_t x);

}  // namespace collapse
