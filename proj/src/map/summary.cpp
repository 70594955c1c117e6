#include "mirror/map/summary.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "mirror/core/error.hpp"
#include "mirror/core/http_json.hpp"

namespace mirror::map {

std::string stub_summary(std::span<const SummaryItem> sample) {
  std::vector<topics::TopicAssignment> assignments;
  assignments.reserve(sample.size());
  for (const auto& item : sample) assignments.push_back({item.event_id, item.topics});
  const auto ranked = topics::aggregate_rank(assignments);

  std::string text = std::to_string(sample.size()) + " items; top topics: ";
  if (ranked.empty()) return text + "none";
  for (std::size_t i = 0; i < std::min<std::size_t>(3, ranked.size()); ++i) {
    if (i) text += ", ";
    text += ranked[i].label;
  }
  return text;
}

RemoteSummaryProvider::RemoteSummaryProvider(RemoteSummaryConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw Error(ErrorCode::InvalidArgument, "remote summary endpoint is not set");
}

std::string RemoteSummaryProvider::summarize(std::span<const SummaryItem> sample) {
  std::vector<std::string> texts;
  texts.reserve(sample.size());
  for (const auto& item : sample) texts.push_back(item.payload);
  const nlohmann::json reply =
      post_json(config_.endpoint, {{"texts", texts}, {"prompt", config_.prompt}}, config_.token, config_.timeout);
  const auto it = reply.find("summary");
  if (it == reply.end() || !it->is_string())
    throw Error(ErrorCode::ProviderUnavailable, "summary reply has no 'summary' string");
  return it->get<std::string>();
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  k = std::min(k, n);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

ViewportSummary summarize_viewport(std::span<const SummaryItem> visible, std::size_t sample_size,
                                   SummaryProvider& provider, std::uint64_t seed) {
  if (sample_size == 0) throw Error(ErrorCode::InvalidArgument, "summary sample size must be >= 1");
  ViewportSummary out;
  out.seed = seed;
  out.visible = visible.size();
  out.provider_id = provider.id();

  std::vector<SummaryItem> sample;
  for (std::size_t i : sample_indices(visible.size(), sample_size, seed)) {
    sample.push_back(visible[i]);
    out.sampled_event_ids.push_back(visible[i].event_id);
  }
  try {
    out.text = provider.summarize(sample);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ProviderUnavailable) throw;
    spdlog::warn("summary provider {} unavailable, using stub: {}", provider.id(), e.what());
    out.text = stub_summary(sample);
    out.degraded = true;
  }
  return out;
}

}  // namespace mirror::map
