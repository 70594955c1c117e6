#pragma once

#include <chrono>
#include <string>
#include <utility>

#include <json.hpp>

namespace mirror {

/// Splits "scheme://host[:port]/path" into the origin and the path.
std::pair<std::string, std::string> split_url(const std::string& url);

/// POSTs `body` as JSON and parses the JSON reply. Any transport failure,
/// non-2xx status or unparsable reply throws Error{ProviderUnavailable}.
nlohmann::json post_json(const std::string& endpoint, const nlohmann::json& body, const std::string& bearer_token,
                         std::chrono::seconds timeout);

}  // namespace mirror
