#include <cctype>
#include <cmath>
#include <cstring>
#include <future>
#include <thread>

#include <spdlog/spdlog.h>

#include "mirror/core/error.hpp"
#include "mirror/core/hash.hpp"
#include "mirror/core/text.hpp"
#include "mirror/embed/cache.hpp"
#include "mirror/embed/embed_texts.hpp"
#include "mirror/embed/local_hash.hpp"

namespace mirror::embed {

void validate_vector(const EmbeddingVector& v, int expected_dim) {
  if (v.size() != expected_dim)
    throw Error(ErrorCode::DimensionMismatch, "expected dimension " + std::to_string(expected_dim) +
                                                  ", got " + std::to_string(v.size()));
  if (!v.allFinite()) throw Error(ErrorCode::InvalidArgument, "embedding has non-finite components");
  if (!(v.norm() > 0.0f)) throw Error(ErrorCode::InvalidArgument, "embedding has zero norm");
}

// ---------------------------------------------------------------------------
// local-hash provider

EmbeddingVector local_hash_embed(std::string_view text, int dim, std::uint64_t seed) {
  if (dim < 8) throw Error(ErrorCode::InvalidArgument, "local-hash dimension must be >= 8");
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw Error(ErrorCode::EmptyText, "text has no tokens");

  const std::uint64_t seed_mix = splitmix64(seed);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
  for (const auto& tok : tokens) {
    const std::uint64_t h = splitmix64(fnv1a64(tok) ^ seed_mix);
    const auto bucket = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim));
    acc[bucket] += (h >> 63) ? -1.0 : 1.0;
  }
  const double norm = acc.norm();
  if (norm == 0.0) {
    // Every token cancelled out; fall back to unsigned counts so the vector
    // stays well-defined.
    for (const auto& tok : tokens) {
      const std::uint64_t h = splitmix64(fnv1a64(tok) ^ seed_mix);
      acc[static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim))] += 1.0;
    }
    return (acc / acc.norm()).cast<float>();
  }
  return (acc / norm).cast<float>();
}

LocalHashProvider::LocalHashProvider(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim < 8) throw Error(ErrorCode::InvalidArgument, "local-hash dimension must be >= 8");
}

std::string LocalHashProvider::id() const {
  return "local-hash/d" + std::to_string(dim_) + "/s" + std::to_string(seed_);
}

std::vector<EmbeddingVector> LocalHashProvider::embed_batch(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(local_hash_embed(t, dim_, seed_));
  return out;
}

// ---------------------------------------------------------------------------
// cache

namespace {

constexpr char kCacheMagic[8] = {'M', 'R', 'E', 'M', 'B', 'C', 'H', '\n'};

}  // namespace

ContentHash content_hash(std::string_view provider_id, std::string_view text) {
  FieldHasher a;
  a.add(provider_id).add(text);
  const std::uint64_t lo = fnv1a64(text, splitmix64(fnv1a64(provider_id) ^ 0x5bd1e995ULL));
  return {a.value(), splitmix64(lo)};
}

EmbeddingCache::EmbeddingCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  load();
  log_.open(path_, std::ios::binary | std::ios::app);
  if (!log_) throw Error(ErrorCode::IoError, "cannot open embedding cache " + path_.string());
  if (std::filesystem::file_size(path_) == 0) {
    log_.write(kCacheMagic, sizeof kCacheMagic);
    log_.write(reinterpret_cast<const char*>(&kCacheFormatVersion), sizeof kCacheFormatVersion);
    log_.flush();
  }
}

void EmbeddingCache::load() {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;
  char magic[sizeof kCacheMagic];
  std::uint32_t version = 0;
  if (!in.read(magic, sizeof magic)) return;  // empty file
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  if (std::memcmp(magic, kCacheMagic, sizeof magic) != 0 || version != kCacheFormatVersion)
    throw Error(ErrorCode::UnknownVersion, "unsupported embedding cache format in " + path_.string());

  while (true) {
    ContentHash key;
    std::uint32_t dim = 0;
    if (!in.read(reinterpret_cast<char*>(&key.hi), 8)) break;
    if (!in.read(reinterpret_cast<char*>(&key.lo), 8)) break;
    if (!in.read(reinterpret_cast<char*>(&dim), 4)) break;
    EmbeddingVector v(dim);
    if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(dim * sizeof(float))))
      break;  // truncated tail from an interrupted write
    entries_.insert_or_assign(key, std::move(v));
  }
}

std::optional<EmbeddingVector> EmbeddingCache::lookup(const ContentHash& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  return it->second;
}

void EmbeddingCache::store(const ContentHash& key, const EmbeddingVector& vector) {
  std::unique_lock lock(mutex_);
  if (!entries_.emplace(key, vector).second) return;
  if (log_.is_open()) {
    const auto dim = static_cast<std::uint32_t>(vector.size());
    log_.write(reinterpret_cast<const char*>(&key.hi), 8);
    log_.write(reinterpret_cast<const char*>(&key.lo), 8);
    log_.write(reinterpret_cast<const char*>(&dim), 4);
    log_.write(reinterpret_cast<const char*>(vector.data()),
               static_cast<std::streamsize>(dim * sizeof(float)));
    log_.flush();
  }
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// embed_texts

namespace {

std::vector<EmbeddingVector> embed_with_retry(EmbeddingProvider& provider, std::span<const std::string> batch,
                                              const EmbedOptions& options) {
  auto backoff = options.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      auto out = provider.embed_batch(batch);
      if (out.size() != batch.size())
        throw Error(ErrorCode::ProviderUnavailable, "provider returned " + std::to_string(out.size()) +
                                                        " vectors for " + std::to_string(batch.size()) + " texts");
      return out;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ProviderUnavailable || attempt >= options.max_retries) throw;
      spdlog::warn("embedding batch failed ({}), retrying in {} ms", e.what(), backoff.count());
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
}

}  // namespace

EmbeddingSet embed_texts(std::span<const std::string> texts, EmbeddingProvider& provider, EmbeddingCache* cache,
                         const EmbedOptions& options) {
  const std::string provider_id = provider.id();
  std::vector<EmbeddingVector> vectors(texts.size());
  std::vector<std::size_t> pending;
  std::vector<ContentHash> keys(texts.size());

  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].empty()) throw Error(ErrorCode::EmptyText, "text " + std::to_string(i) + " is empty",
                                      static_cast<long>(i));
    keys[i] = content_hash(provider_id, texts[i]);
    if (cache) {
      if (auto hit = cache->lookup(keys[i])) {
        vectors[i] = std::move(*hit);
        continue;
      }
    }
    pending.push_back(i);
  }

  // Duplicate texts inside one call embed once.
  std::unordered_map<ContentHash, std::size_t, ContentHashHasher> first_of;
  std::vector<std::size_t> unique;
  std::vector<std::pair<std::size_t, std::size_t>> duplicates;
  for (std::size_t i : pending) {
    auto [it, inserted] = first_of.emplace(keys[i], i);
    if (inserted)
      unique.push_back(i);
    else
      duplicates.emplace_back(i, it->second);
  }

  const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);
  std::vector<std::vector<std::string>> batches;
  std::vector<std::vector<std::size_t>> batch_rows;
  for (std::size_t start = 0; start < unique.size(); start += batch_size) {
    const std::size_t end = std::min(unique.size(), start + batch_size);
    std::vector<std::string> batch;
    std::vector<std::size_t> rows;
    for (std::size_t j = start; j < end; ++j) {
      batch.push_back(texts[unique[j]]);
      rows.push_back(unique[j]);
    }
    batches.push_back(std::move(batch));
    batch_rows.push_back(std::move(rows));
  }

  auto run_batch = [&](std::size_t b) {
    auto out = embed_with_retry(provider, batches[b], options);
    for (std::size_t j = 0; j < out.size(); ++j) vectors[batch_rows[b][j]] = std::move(out[j]);
  };

  const std::size_t parallelism = std::max<std::size_t>(1, options.parallelism);
  if (parallelism == 1 || batches.size() <= 1) {
    for (std::size_t b = 0; b < batches.size(); ++b) run_batch(b);
  } else {
    for (std::size_t start = 0; start < batches.size(); start += parallelism) {
      std::vector<std::future<void>> inflight;
      for (std::size_t b = start; b < std::min(batches.size(), start + parallelism); ++b)
        inflight.push_back(std::async(std::launch::async, run_batch, b));
      for (auto& f : inflight) f.get();
    }
  }
  for (auto [dup, original] : duplicates) vectors[dup] = vectors[original];

  EmbeddingSet set;
  set.provider_id = provider_id;
  set.dim = vectors.empty() ? 0 : static_cast<int>(vectors.front().size());
  set.vectors.resize(static_cast<Eigen::Index>(vectors.size()), set.dim);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    validate_vector(vectors[i], set.dim);
    set.vectors.row(static_cast<Eigen::Index>(i)) = vectors[i].transpose();
  }
  if (cache)
    for (std::size_t i : unique) cache->store(keys[i], vectors[i]);
  return set;
}

}  // namespace mirror::embed
