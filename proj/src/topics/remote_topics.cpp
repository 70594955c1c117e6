#include "mirror/core/error.hpp"
#include "mirror/core/http_json.hpp"
#include "mirror/topics/topics.hpp"

namespace mirror::topics {

RemoteTopicProvider::RemoteTopicProvider(RemoteTopicConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw Error(ErrorCode::InvalidArgument, "remote topic endpoint is not set");
}

std::vector<std::string> RemoteTopicProvider::topics_for(std::size_t, std::string_view text) {
  const nlohmann::json reply =
      post_json(config_.endpoint, {{"text", text}, {"prompt", config_.prompt}}, config_.token, config_.timeout);
  const auto it = reply.find("topics");
  if (it == reply.end() || !it->is_array())
    throw Error(ErrorCode::ProviderUnavailable, "topic reply has no 'topics' array");
  std::vector<std::string> out;
  for (const auto& t : *it)
    if (t.is_string()) out.push_back(t.get<std::string>());
  return out;
}

}  // namespace mirror::topics
