#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mirror {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = kFnvOffset) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= kFnvPrime;
  }
  return state;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string to_hex(std::uint64_t value);

/// Incremental hash over several fields; a separator byte is mixed in
/// between fields so ("ab","c") and ("a","bc") differ.
class FieldHasher {
 public:
  FieldHasher& add(std::string_view field) {
    state_ = fnv1a64(field, state_);
    state_ = fnv1a64(std::string_view("\x1f", 1), state_);
    return *this;
  }
  std::uint64_t value() const { return splitmix64(state_); }
  std::string hex() const { return to_hex(value()); }

 private:
  std::uint64_t state_ = kFnvOffset;
};

}  // namespace mirror
