#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

#include "mirror/reduce/layout.hpp"

namespace mirror::topics {

inline constexpr std::size_t kMaxTopicsPerItem = 3;
inline constexpr std::size_t kMaxLabelBytes = 64;

struct TopicAssignment {
  std::string event_id;
  std::vector<std::string> topics;  // at most kMaxTopicsPerItem, display form
  bool operator==(const TopicAssignment&) const = default;
};

class TopicProvider {
 public:
  virtual ~TopicProvider() = default;
  virtual std::string id() const = 0;
  virtual bool remote() const = 0;
  /// Called once with the whole corpus before any topics_for call.
  virtual void prepare(std::span<const std::string> corpus) { (void)corpus; }
  /// Raw labels for corpus document `index` (text passed for convenience).
  /// May return more than three; the caller truncates.
  virtual std::vector<std::string> topics_for(std::size_t index, std::string_view text) = 0;
};

/// Bundled English stopword list used by the TF-IDF provider.
const std::unordered_set<std::string>& stopwords();

/// Tokens eligible as topics: length >= 3, not all digits, not a stopword.
std::vector<std::string> content_tokens(std::string_view text);

/// Per-document TF-IDF over the dataset corpus; returns the (up to) three
/// best-scoring content tokens, ties broken lexicographically.
/// idf = ln((1 + N) / (1 + df)) + 1.
class TfidfTopicProvider final : public TopicProvider {
 public:
  std::string id() const override { return "tfidf-top3"; }
  bool remote() const override { return false; }
  void prepare(std::span<const std::string> corpus) override;
  std::vector<std::string> topics_for(std::size_t index, std::string_view text) override;

 private:
  std::unordered_map<std::string, std::size_t> document_frequency_;
  std::size_t documents_ = 0;
};

struct RemoteTopicConfig {
  std::string endpoint;
  std::string prompt =
      "List up to three short primary topics of the following content as a JSON array of strings.";
  std::string token;
  std::chrono::seconds timeout{60};
};

/// POSTs {"text": ..., "prompt": ...} and expects {"topics": [...]}.
class RemoteTopicProvider final : public TopicProvider {
 public:
  explicit RemoteTopicProvider(RemoteTopicConfig config);
  std::string id() const override { return "remote-topics"; }
  bool remote() const override { return true; }
  std::vector<std::string> topics_for(std::size_t index, std::string_view text) override;

 private:
  RemoteTopicConfig config_;
};

/// Trimmed and lowercased: the aggregation key.
std::string normalize_label(std::string_view label);

/// Asks the provider for each payload, keeps the first three non-empty
/// trimmed labels (at most 64 bytes each, duplicates by key dropped). A
/// failing item yields an empty assignment and a warning.
std::vector<TopicAssignment> extract_topics(std::span<const std::string> event_ids,
                                            std::span<const std::string> payloads, TopicProvider& provider,
                                            std::size_t parallelism = 1);

struct RankedTopic {
  std::string key;    // normalized label
  std::string label;  // casing of the first occurrence
  std::size_t count = 0;
  int rank = 0;       // 1 = most frequent
  std::vector<std::string> member_event_ids;
  Eigen::Vector2d anchor = Eigen::Vector2d::Zero();
  bool operator==(const RankedTopic&) const = default;
};

/// Groups by normalized label; descending count, ties by key.
std::vector<RankedTopic> aggregate_rank(std::span<const TopicAssignment> assignments);

/// event_id -> row of the layout.
using PositionIndex = std::unordered_map<std::string, reduce::Index>;

/// Anchor of each topic = centroid of its members' positions. Throws
/// Error{MissingPosition} naming the first unknown member.
void anchor_topics(std::vector<RankedTopic>& ranked, const PositionIndex& index, const reduce::Layout& layout);

struct TreeParams {
  int levels = 4;
  std::size_t l0_max = 12;
  std::size_t fanout = 4;

  /// Highest rank admitted at `level`: l0_max * fanout^level.
  std::size_t cap(int level) const;
};

struct TopicNode {
  std::string label;
  std::string key;
  int rank = 0;
  std::size_t count = 0;
  Eigen::Vector2d anchor = Eigen::Vector2d::Zero();
  int zoom_min = 0;
  std::optional<std::size_t> parent;
  std::vector<std::size_t> children;
  /// Events carrying this topic; |member_event_ids| == count.
  std::vector<std::string> member_event_ids;
  /// The part of the map this node labels: its parent's region split by
  /// nearest anchor among the parent and its children. Sibling regions are
  /// disjoint and nested in the parent's.
  std::vector<std::string> region_event_ids;
};

struct TopicTree {
  std::vector<TopicNode> nodes;  // ascending rank
  std::vector<std::size_t> roots;
  TreeParams params;

  /// Longest root-to-leaf chain, counting nodes; 0 when empty.
  int depth() const;
};

/// Level 0 admits ranks 1..l0_max; level l admits ranks up to cap(l). A
/// topic first admitted at level l gets zoom_min = l and, for l > 0, the
/// nearest-anchored topic admitted at level l - 1 as parent. Regions are
/// computed over `events` positioned by `index` in `layout`.
TopicTree build_topic_tree(const std::vector<RankedTopic>& ranked, const TreeParams& params,
                           std::span<const std::string> event_ids, const PositionIndex& index,
                           const reduce::Layout& layout);

}  // namespace mirror::topics
