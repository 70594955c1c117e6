#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string_view>
#include <unordered_map>

#include "mirror/embed/embedding.hpp"

namespace mirror::embed {

/// 128-bit digest of (provider_id, text).
struct ContentHash {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;
  bool operator==(const ContentHash&) const = default;
};

ContentHash content_hash(std::string_view provider_id, std::string_view text);

struct ContentHashHasher {
  std::size_t operator()(const ContentHash& h) const noexcept { return h.hi ^ (h.lo * 31); }
};

inline constexpr std::uint32_t kCacheFormatVersion = 1;

/// Append-only on-disk vector cache. Lookups and inserts may run from
/// several threads at once; every insert is appended to the file
/// immediately so a crash loses at most the record being written.
class EmbeddingCache {
 public:
  /// In-memory only.
  EmbeddingCache() = default;
  /// Opens or creates `path`. Throws Error{UnknownVersion} on a foreign header.
  explicit EmbeddingCache(std::filesystem::path path);

  EmbeddingCache(const EmbeddingCache&) = delete;
  EmbeddingCache& operator=(const EmbeddingCache&) = delete;

  std::optional<EmbeddingVector> lookup(const ContentHash& key) const;
  void store(const ContentHash& key, const EmbeddingVector& vector);

  std::size_t size() const;
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  void load();

  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<ContentHash, EmbeddingVector, ContentHashHasher> entries_;
  std::ofstream log_;
  mutable std::atomic<std::size_t> hits_{0};
  mutable std::atomic<std::size_t> misses_{0};
};

}  // namespace mirror::embed
