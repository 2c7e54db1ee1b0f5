// mvspoof/util.hpp

// Copyright 2026  mvspoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MVSPOOF_UTIL_HPP_
#define MVSPOOF_UTIL_HPP_

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mvspoof {

/// Domain error: bad input data, malformed files, violated preconditions.
/// The CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MVSPOOF_CHECK(cond, msg)                          \
  do {                                                    \
    if (!(cond)) throw ::mvspoof::Error(std::string(msg)); \
  } while (0)

/// Seeded generator with platform-independent transforms. The standard
/// distributions are implementation-defined, so they are avoided wherever
/// outputs must be bit-reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <class It>
  void shuffle(It first, It last) {
    const auto n = last - first;
    for (auto i = n - 1; i > 0; --i) {
      const auto j = uniform_int(0, i);
      std::swap(first[i], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent sub-seed from a base seed and a component offset.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t offset) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (offset + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view s,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a(s.data(), s.size(), h);
}

std::uint64_t file_checksum(const std::filesystem::path& path);

/// Little-endian binary writer/reader used by every on-disk artifact.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& os) : os_(os) {}

  template <class T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
        std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    }
    os_.write(reinterpret_cast<const char*>(buf), sizeof(T));
  }

  void put_string(std::string_view s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ostream& os_;
};

class BinaryReader {
 public:
  BinaryReader(std::istream& is, std::string what)
      : is_(is), what_(std::move(what)) {}

  template <class T>
  T get() {
    unsigned char buf[sizeof(T)];
    is_.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!is_) throw Error("truncated " + what_);
    if constexpr (std::endian::native == std::endian::big) {
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
        std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    }
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    std::string s(n, '\0');
    is_.read(s.data(), n);
    if (!is_) throw Error("truncated " + what_);
    return s;
  }

 private:
  std::istream& is_;
  std::string what_;
};

/// Writes through a temporary file and renames it into place.
void atomic_write(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& body);

std::vector<std::string> split(std::string_view s, char sep);

}  // namespace mvspoof

#endif  // MVSPOOF_UTIL_HPP_
