#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace skewjoin {

// splitmix64 finalizer; used for join-value hashing and digests.
constexpr std::uint64_t mix64(std::uint64_t x) {
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

// Order-independent 128-bit digest of a multiset. Each element contributes
// two independent 64-bit hashes that are summed modulo 2^64, so the result
// depends only on the multiset, duplicates change it, and partial digests
// computed on different threads merge by addition.
struct MultisetDigest {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  std::uint64_t count = 0;

  void add(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = mix64(a ^ mix64(b ^ mix64(c)));
    lo += h;
    hi += mix64(h ^ 0x5851f42d4c957f2dULL);
    ++count;
  }

  void merge(const MultisetDigest& other) {
    lo += other.lo;
    hi += other.hi;
    count += other.count;
  }

  // 32 hex digits; the element count is folded into the high lane.
  std::string hex() const {
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx",
                  static_cast<unsigned long long>(hi ^ mix64(count)),
                  static_cast<unsigned long long>(lo));
    return buf;
  }

  friend bool operator==(const MultisetDigest&, const MultisetDigest&) = default;
};

}  // namespace skewjoin
