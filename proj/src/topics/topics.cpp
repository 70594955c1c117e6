#include "mirror/topics/topics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>

#include <spdlog/spdlog.h>

#include "mirror/core/error.hpp"
#include "mirror/core/text.hpp"

namespace mirror::topics {

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> words{
      "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any", "are",
      "aren", "as", "at", "be", "because", "been", "before", "being", "below", "best", "between", "both",
      "but", "by", "can", "could", "did", "didn", "do", "does", "doesn", "doing", "don", "down", "during",
      "each", "ever", "every", "few", "first", "for", "from", "full", "further", "get", "gets", "got", "had",
      "has", "have", "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how", "i",
      "if", "in", "into", "is", "isn", "it", "its", "itself", "just", "know", "let", "like", "ll", "made",
      "make", "many", "me", "more", "most", "much", "must", "my", "myself", "new", "no", "nor", "not",
      "now", "of", "off", "on", "once", "one", "only", "or", "other", "our", "ours", "ourselves", "out",
      "over", "own", "part", "really", "same", "see", "she", "should", "so", "some", "still", "such",
      "than", "that", "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they",
      "thing", "things", "this", "those", "through", "to", "too", "two", "under", "until", "up", "us",
      "ve", "very", "via", "video", "videos", "vs", "was", "wasn", "watch", "watched", "way", "we", "were",
      "what", "when", "where", "which", "while", "who", "whom", "why", "will", "with", "won", "would",
      "you", "your", "yours", "yourself", "yourselves", "youtube", "www", "http", "https", "com"};
  return words;
}

std::vector<std::string> content_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& tok : tokenize(text)) {
    if (tok.size() < 3) continue;
    if (std::all_of(tok.begin(), tok.end(), [](unsigned char c) { return c >= '0' && c <= '9'; })) continue;
    if (stopwords().contains(tok)) continue;
    out.push_back(std::move(tok));
  }
  return out;
}

void TfidfTopicProvider::prepare(std::span<const std::string> corpus) {
  document_frequency_.clear();
  documents_ = corpus.size();
  for (const auto& doc : corpus) {
    auto tokens = content_tokens(doc);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) ++document_frequency_[t];
  }
}

std::vector<std::string> TfidfTopicProvider::topics_for(std::size_t, std::string_view text) {
  const auto tokens = content_tokens(text);
  if (tokens.empty()) return {};
  std::map<std::string, double> tf;
  for (const auto& t : tokens) tf[t] += 1.0 / static_cast<double>(tokens.size());

  const double n = static_cast<double>(std::max<std::size_t>(documents_, 1));
  std::vector<std::pair<double, std::string>> scored;
  for (const auto& [token, freq] : tf) {
    auto it = document_frequency_.find(token);
    const double df = it == document_frequency_.end() ? 0.0 : static_cast<double>(it->second);
    scored.emplace_back(freq * (std::log((1.0 + n) / (1.0 + df)) + 1.0), token);
  }
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(kMaxTopicsPerItem, scored.size()); ++i) out.push_back(scored[i].second);
  return out;
}

std::string normalize_label(std::string_view label) { return to_lower_ascii(trim(label)); }

std::vector<TopicAssignment> extract_topics(std::span<const std::string> event_ids,
                                            std::span<const std::string> payloads, TopicProvider& provider,
                                            std::size_t parallelism) {
  if (event_ids.size() != payloads.size())
    throw Error(ErrorCode::InvalidArgument, "event ids and payloads differ in length");
  provider.prepare(payloads);

  std::vector<TopicAssignment> out(payloads.size());
  auto run = [&](std::size_t i) {
    out[i].event_id = event_ids[i];
    std::vector<std::string> raw;
    try {
      raw = provider.topics_for(i, payloads[i]);
    } catch (const std::exception& e) {
      spdlog::warn("topic extraction failed for {}: {}", event_ids[i], e.what());
      return;
    }
    std::vector<std::string> keys;
    for (const auto& label : raw) {
      if (out[i].topics.size() == kMaxTopicsPerItem) break;
      const std::string display = truncate_utf8(trim(label), kMaxLabelBytes);
      std::string key = normalize_label(display);
      if (key.empty() || std::find(keys.begin(), keys.end(), key) != keys.end()) continue;
      keys.push_back(std::move(key));
      out[i].topics.push_back(display);
    }
  };

  if (parallelism <= 1 || !provider.remote()) {
    for (std::size_t i = 0; i < payloads.size(); ++i) run(i);
  } else {
    for (std::size_t start = 0; start < payloads.size(); start += parallelism) {
      std::vector<std::future<void>> inflight;
      for (std::size_t i = start; i < std::min(payloads.size(), start + parallelism); ++i)
        inflight.push_back(std::async(std::launch::async, run, i));
      for (auto& f : inflight) f.get();
    }
  }
  return out;
}

std::vector<RankedTopic> aggregate_rank(std::span<const TopicAssignment> assignments) {
  std::map<std::string, RankedTopic> groups;
  for (const auto& a : assignments) {
    for (const auto& label : a.topics) {
      const std::string key = normalize_label(label);
      if (key.empty()) continue;
      auto [it, inserted] = groups.try_emplace(key);
      RankedTopic& t = it->second;
      if (inserted) {
        t.key = key;
        t.label = std::string(trim(label));
      }
      if (t.member_event_ids.empty() || t.member_event_ids.back() != a.event_id) {
        t.member_event_ids.push_back(a.event_id);
        ++t.count;
      }
    }
  }
  std::vector<RankedTopic> ranked;
  ranked.reserve(groups.size());
  for (auto& [key, t] : groups) {
    std::sort(t.member_event_ids.begin(), t.member_event_ids.end());
    t.member_event_ids.erase(std::unique(t.member_event_ids.begin(), t.member_event_ids.end()),
                             t.member_event_ids.end());
    t.count = t.member_event_ids.size();
    ranked.push_back(std::move(t));
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedTopic& a, const RankedTopic& b) {
    return a.count > b.count || (a.count == b.count && a.key < b.key);
  });
  for (std::size_t i = 0; i < ranked.size(); ++i) ranked[i].rank = static_cast<int>(i + 1);
  return ranked;
}

void anchor_topics(std::vector<RankedTopic>& ranked, const PositionIndex& index, const reduce::Layout& layout) {
  for (auto& t : ranked) {
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    for (const auto& id : t.member_event_ids) {
      auto it = index.find(id);
      if (it == index.end() || it->second < 0 || it->second >= layout.rows())
        throw Error(ErrorCode::MissingPosition, "topic '" + t.label + "' member " + id + " has no position");
      sum += layout.row(it->second).transpose();
    }
    t.anchor = t.member_event_ids.empty() ? Eigen::Vector2d::Zero()
                                          : Eigen::Vector2d(sum / static_cast<double>(t.member_event_ids.size()));
  }
}

std::size_t TreeParams::cap(int level) const {
  std::size_t c = l0_max;
  for (int l = 0; l < level; ++l) c *= fanout;
  return c;
}

int TopicTree::depth() const {
  int best = 0;
  std::vector<std::pair<std::size_t, int>> stack;
  for (auto r : roots) stack.emplace_back(r, 1);
  while (!stack.empty()) {
    auto [node, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    for (auto c : nodes[node].children) stack.emplace_back(c, d + 1);
  }
  return best;
}

namespace {

/// Index of the anchor closest to `p`; earlier candidates win ties.
std::size_t nearest_anchor(const Eigen::Vector2d& p, const std::vector<TopicNode>& nodes,
                           std::span<const std::size_t> candidates) {
  std::size_t best = candidates.front();
  double best_d = (nodes[best].anchor - p).squaredNorm();
  for (std::size_t c : candidates.subspan(1)) {
    const double d = (nodes[c].anchor - p).squaredNorm();
    if (d < best_d) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

}  // namespace

TopicTree build_topic_tree(const std::vector<RankedTopic>& ranked, const TreeParams& params,
                           std::span<const std::string> event_ids, const PositionIndex& index,
                           const reduce::Layout& layout) {
  if (params.levels < 1) throw Error(ErrorCode::InvalidArgument, "topic tree needs at least one level");
  TopicTree tree;
  tree.params = params;

  for (const auto& t : ranked) {
    const auto rank = static_cast<std::size_t>(t.rank);
    int level = 0;
    while (level < params.levels && rank > params.cap(level)) ++level;
    if (level >= params.levels) break;  // ranked ascending, nothing later fits

    TopicNode node;
    node.label = t.label;
    node.key = t.key;
    node.rank = t.rank;
    node.count = t.count;
    node.anchor = t.anchor;
    node.zoom_min = level;
    node.member_event_ids = t.member_event_ids;

    const std::size_t id = tree.nodes.size();
    if (level == 0) {
      tree.roots.push_back(id);
    } else {
      std::vector<std::size_t> admitted;
      for (std::size_t c = 0; c < tree.nodes.size(); ++c)
        if (tree.nodes[c].zoom_min <= level - 1) admitted.push_back(c);
      const std::size_t parent = nearest_anchor(node.anchor, tree.nodes, admitted);
      node.parent = parent;
      tree.nodes[parent].children.push_back(id);
    }
    tree.nodes.push_back(std::move(node));
  }
  if (tree.nodes.empty()) return tree;

  // Regions: split the map among roots, then each node's region among
  // itself and its children, top-down.
  std::vector<std::pair<std::string, Eigen::Vector2d>> located;
  located.reserve(event_ids.size());
  for (const auto& id : event_ids) {
    auto it = index.find(id);
    if (it == index.end()) throw Error(ErrorCode::MissingPosition, "event " + id + " has no position");
    located.emplace_back(id, layout.row(it->second).transpose());
  }

  std::vector<std::vector<std::size_t>> region_rows(tree.nodes.size());
  for (std::size_t e = 0; e < located.size(); ++e)
    region_rows[nearest_anchor(located[e].second, tree.nodes, tree.roots)].push_back(e);

  std::vector<std::size_t> order = tree.roots;
  for (std::size_t head = 0; head < order.size(); ++head) {
    const std::size_t p = order[head];
    const auto& kids = tree.nodes[p].children;
    if (!kids.empty()) {
      std::vector<std::size_t> competitors{p};
      competitors.insert(competitors.end(), kids.begin(), kids.end());
      // The parent keeps its whole region; children take the parts nearest them.
      for (std::size_t e : region_rows[p]) {
        const std::size_t owner = nearest_anchor(located[e].second, tree.nodes, competitors);
        if (owner != p) region_rows[owner].push_back(e);
      }
      order.insert(order.end(), kids.begin(), kids.end());
    }
  }
  for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
    auto& ids = tree.nodes[n].region_event_ids;
    for (std::size_t e : region_rows[n]) ids.push_back(located[e].first);
    std::sort(ids.begin(), ids.end());
  }
  return tree;
}

}  // namespace mirror::topics
