#pragma once

#include <atomic>
#include <chrono>
#include <string>

#include "mirror/embed/embedding.hpp"

namespace mirror::embed {

struct RemoteEmbeddingConfig {
  std::string endpoint;  // e.g. https://api.example.com/v1/embeddings
  std::string model;
  std::string token;     // sent as a bearer token, never persisted
  std::chrono::seconds timeout{60};
};

/// POSTs {"input": [...], "model": ...} and accepts either
/// {"data": [{"embedding": [...], "index": i}, ...]} or {"embeddings": [[...], ...]}.
class RemoteHttpProvider final : public EmbeddingProvider {
 public:
  explicit RemoteHttpProvider(RemoteEmbeddingConfig config);

  std::string id() const override;
  bool remote() const override { return true; }
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override;

  /// 0 until the first successful reply fixes the dimension.
  int declared_dim() const { return dim_.load(); }

 private:
  RemoteEmbeddingConfig config_;
  std::atomic<int> dim_{0};
};

}  // namespace mirror::embed
