#include "mirror/embed/remote_http.hpp"

#include "mirror/core/error.hpp"
#include "mirror/core/http_json.hpp"

namespace mirror::embed {

using nlohmann::json;

RemoteHttpProvider::RemoteHttpProvider(RemoteEmbeddingConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw Error(ErrorCode::InvalidArgument, "remote embedding endpoint is not set");
}

std::string RemoteHttpProvider::id() const { return "remote-http/" + config_.model; }

std::vector<EmbeddingVector> RemoteHttpProvider::embed_batch(std::span<const std::string> texts) {
  const json body{{"input", std::vector<std::string>(texts.begin(), texts.end())}, {"model", config_.model}};
  const json reply = post_json(config_.endpoint, body, config_.token, config_.timeout);

  std::vector<EmbeddingVector> out(texts.size());
  auto assign = [&](std::size_t index, const json& values) {
    if (index >= out.size() || !values.is_array())
      throw Error(ErrorCode::ProviderUnavailable, "embedding reply has an unexpected shape");
    EmbeddingVector v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t k = 0; k < values.size(); ++k) v[static_cast<Eigen::Index>(k)] = values[k].get<float>();
    out[index] = std::move(v);
  };
  if (reply.contains("data") && reply["data"].is_array()) {
    const auto& data = reply["data"];
    for (std::size_t i = 0; i < data.size(); ++i) assign(data[i].value("index", i), data[i].at("embedding"));
  } else if (reply.contains("embeddings") && reply["embeddings"].is_array()) {
    const auto& data = reply["embeddings"];
    for (std::size_t i = 0; i < data.size(); ++i) assign(i, data[i]);
  } else {
    throw Error(ErrorCode::ProviderUnavailable, "embedding reply has neither 'data' nor 'embeddings'");
  }

  for (const auto& v : out) {
    if (v.size() == 0) throw Error(ErrorCode::ProviderUnavailable, "embedding reply is missing vectors");
    int expected = dim_.load();
    if (expected == 0) {
      dim_.compare_exchange_strong(expected, static_cast<int>(v.size()));
      expected = dim_.load();
    }
    validate_vector(v, expected);
  }
  return out;
}

}  // namespace mirror::embed
