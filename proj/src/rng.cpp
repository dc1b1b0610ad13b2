#include "collapse/rng.hpp"

#include <array>

namespace collapse {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::mt19937_64 seeded_engine(std::uint64_t root_seed, std::uint64_t stream_index) {
  const std::uint64_t a = mix64(root_seed);
  const std::uint64_t b = mix64(a ^ mix64(stream_index + 0x632be59bd9b4e019ULL));
  std::array<std::uint32_t, 4> words{
      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t root_seed, std::uint64_t stream_index)
    : root_seed_(root_seed),
      stream_index_(stream_index),
      engine_(seeded_engine(root_seed, stream_index)) {}

RngStream RngStream::split(std::uint64_t child_index) const {
  return RngStream(mix64(root_seed_ ^ mix64(stream_index_ ^ 0xd1b54a32d192ed03ULL)), child_index);
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::uniform() { return uniform_(engine_); }

}  // namespace collapse
