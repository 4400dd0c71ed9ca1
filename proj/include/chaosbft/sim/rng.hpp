// Copyright 2026 The chaosbft Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chaosbft {

class UnknownStream : public std::out_of_range {
 public:
  explicit UnknownStream(std::string_view id)
      : std::out_of_range("unknown rng stream: " + std::string(id)) {}
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

struct Uniform01 {};
struct UniformInt {
  std::int64_t lo;
  std::int64_t hi;
};
struct Bernoulli {
  double p;
};

/// One deterministic random stream. The engine is std::mt19937_64, whose
/// output sequence is fixed by the standard; the distributions are written
/// out here because the std:: ones are implementation-defined.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view stream_id)
      : id_(stream_id),
        engine_(detail::splitmix64(seed ^ detail::splitmix64(detail::fnv1a(stream_id)))) {}

  const std::string& id() const { return id_; }
  std::uint64_t draws() const { return draws_; }

  std::uint64_t next_u64() {
    ++draws_;
    return engine_();
  }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: lo > hi");
    const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
    if (span == std::numeric_limits<std::uint64_t>::max()) {
      return static_cast<std::int64_t>(next_u64());
    }
    const std::uint64_t range = span + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) + x % range);
  }

  /// p <= 0 never draws and returns false; p >= 1 never draws and returns
  /// true. Degenerate probabilities therefore do not advance the stream.
  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform01() < p;
  }

  double draw(Uniform01) { return uniform01(); }
  std::int64_t draw(UniformInt d) { return uniform_int(d.lo, d.hi); }
  bool draw(Bernoulli d) { return bernoulli(d.p); }

 private:
  std::string id_;
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

/// Named streams derived from one scenario seed. Each consumer registers its
/// own stream so that extra draws on one never shift another.
class RngRegistry {
 public:
  explicit RngRegistry(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  RngStream& register_stream(const std::string& id) {
    auto [it, inserted] = streams_.try_emplace(id, seed_, id);
    return it->second;
  }

  bool has_stream(std::string_view id) const { return streams_.find(id) != streams_.end(); }

  RngStream& stream(std::string_view id) {
    auto it = streams_.find(id);
    if (it == streams_.end()) throw UnknownStream(id);
    return it->second;
  }

  template <class Distribution>
  auto next_random(std::string_view id, Distribution d) {
    return stream(id).draw(d);
  }

 private:
  std::uint64_t seed_;
  std::map<std::string, RngStream, std::less<>> streams_;
};

}  // namespace chaosbft
