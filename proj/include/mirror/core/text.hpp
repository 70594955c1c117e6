#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mirror {

/// Lowercased runs of ASCII letters/digits; bytes >= 0x80 count as word
/// characters so UTF-8 words stay intact.
std::vector<std::string> tokenize(std::string_view text);

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

/// Cuts `s` to at most `max_bytes` without splitting a UTF-8 sequence.
std::string truncate_utf8(std::string_view s, std::size_t max_bytes);

}  // namespace mirror
