#include "mirror/core/http_json.hpp"

#include <httplib.h>

#include "mirror/core/error.hpp"

namespace mirror {

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidArgument, "endpoint must be an absolute URL");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

nlohmann::json post_json(const std::string& endpoint, const nlohmann::json& body, const std::string& bearer_token,
                         std::chrono::seconds timeout) {
  const auto [origin, path] = split_url(endpoint);
  httplib::Client client(origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);

  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) throw Error(ErrorCode::ProviderUnavailable, "request to " + origin + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw Error(ErrorCode::ProviderUnavailable, origin + " returned HTTP " + std::to_string(res->status));
  auto reply = nlohmann::json::parse(res->body, nullptr, false);
  if (reply.is_discarded()) throw Error(ErrorCode::ProviderUnavailable, origin + " returned invalid JSON");
  return reply;
}

}  // namespace mirror
