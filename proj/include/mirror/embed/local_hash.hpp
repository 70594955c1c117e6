#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mirror/embed/embedding.hpp"

namespace mirror::embed {

/// Signed feature hashing of the token bag into `dim` buckets, L2-normalized.
/// Throws Error{EmptyText} when no token survives, InvalidArgument if dim < 8.
EmbeddingVector local_hash_embed(std::string_view text, int dim, std::uint64_t seed);

class LocalHashProvider final : public EmbeddingProvider {
 public:
  explicit LocalHashProvider(int dim = 64, std::uint64_t seed = 42);

  std::string id() const override;
  bool remote() const override { return false; }
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override;

  int dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }

 private:
  int dim_;
  std::uint64_t seed_;
};

}  // namespace mirror::embed
