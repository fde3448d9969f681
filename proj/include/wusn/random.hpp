#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace wusn {

using Rng = std::mt19937_64;

/// Independent stream derived from a master seed and a list of stream indices
/// (e.g. sweep point and trial number).
inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {}) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * stream.size());
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto s : stream) push(s);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

} // namespace wusn
