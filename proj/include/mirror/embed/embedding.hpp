#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace mirror {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace mirror

namespace mirror::embed {

using EmbeddingVector = Eigen::VectorXf;
using EmbeddingMatrix = RowMatrix<float>;

/// Vectors for one dataset: row i embeds text i. All rows share the
/// provider and dimension.
struct EmbeddingSet {
  std::string provider_id;
  int dim = 0;
  EmbeddingMatrix vectors;

  Eigen::Index size() const { return vectors.rows(); }
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  /// Stable identifier recorded in the manifest and folded into cache keys.
  virtual std::string id() const = 0;
  virtual bool remote() const = 0;

  /// One vector per text, in order. Throws Error{ProviderUnavailable} on
  /// transient failure and Error{DimensionMismatch} on a wrong-length reply.
  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) = 0;
};

/// Checks a provider reply, throwing DimensionMismatch or InvalidArgument.
void validate_vector(const EmbeddingVector& v, int expected_dim);

}  // namespace mirror::embed
