#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mirror/topics/topics.hpp"

namespace mirror::map {

struct SummaryItem {
  std::string event_id;
  std::string payload;
  std::vector<std::string> topics;
};

class SummaryProvider {
 public:
  virtual ~SummaryProvider() = default;
  virtual std::string id() const = 0;
  virtual bool remote() const = 0;
  virtual std::string summarize(std::span<const SummaryItem> sample) = 0;
};

/// "N items; top topics: t1, t2, t3" where N is the sample size and the
/// topics are the sample's aggregate_rank top three (fewer if there are
/// fewer; "none" if there are none).
std::string stub_summary(std::span<const SummaryItem> sample);

class StubSummaryProvider final : public SummaryProvider {
 public:
  std::string id() const override { return "stub"; }
  bool remote() const override { return false; }
  std::string summarize(std::span<const SummaryItem> sample) override { return stub_summary(sample); }
};

struct RemoteSummaryConfig {
  std::string endpoint;
  std::string prompt = "Summarize the common themes of these items in two or three sentences.";
  std::string token;
  std::chrono::seconds timeout{60};
};

/// POSTs {"texts": [...], "prompt": ...} and expects {"summary": "..."}.
class RemoteSummaryProvider final : public SummaryProvider {
 public:
  explicit RemoteSummaryProvider(RemoteSummaryConfig config);
  std::string id() const override { return "remote-summary"; }
  bool remote() const override { return true; }
  std::string summarize(std::span<const SummaryItem> sample) override;

 private:
  RemoteSummaryConfig config_;
};

/// min(k, n) distinct indices in [0, n), ascending, from a partial
/// Fisher-Yates shuffle driven by mt19937_64(seed).
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

struct ViewportSummary {
  std::string text;
  std::uint64_t seed = 0;
  std::size_t visible = 0;
  std::vector<std::string> sampled_event_ids;
  std::string provider_id;
  bool degraded = false;  // provider failed; text is the stub fallback
};

/// Throws Error{InvalidArgument} when sample_size is 0. A provider failure
/// falls back to the stub text and sets degraded.
ViewportSummary summarize_viewport(std::span<const SummaryItem> visible, std::size_t sample_size,
                                   SummaryProvider& provider, std::uint64_t seed);

}  // namespace mirror::map
