#pragma once

#include <chrono>
#include <span>
#include <string>

#include "mirror/embed/cache.hpp"
#include "mirror/embed/embedding.hpp"

namespace mirror::embed {

struct EmbedOptions {
  std::size_t batch_size = 128;
  std::size_t parallelism = 1;
  int max_retries = 4;
  std::chrono::milliseconds initial_backoff{200};
};

/// Embeds `texts` in order. Cache hits skip the provider; misses go out in
/// batches (concurrently up to `parallelism`) with exponential backoff on
/// ProviderUnavailable. Throws ProviderUnavailable after the last retry and
/// DimensionMismatch if vectors disagree on length.
EmbeddingSet embed_texts(std::span<const std::string> texts, EmbeddingProvider& provider,
                         EmbeddingCache* cache = nullptr, const EmbedOptions& options = {});

}  // namespace mirror::embed
