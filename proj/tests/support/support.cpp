#include "support.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mirror/core/error.hpp"
#include "mirror/embed/local_hash.hpp"

#ifndef MIRROR_FIXTURE_DIR
#error "MIRROR_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace mirror::test {

namespace fs = std::filesystem;
using ingest::FootprintEvent;

fs::path fixture_path(std::string_view name) { return fs::path(MIRROR_FIXTURE_DIR) / name; }

std::string read_fixture(std::string_view name) {
  std::ifstream in(fixture_path(name), std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + std::string(name));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TempDir::TempDir(std::string_view tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          (std::string(tag) + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
           std::to_string(rd() % 100000));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

// ---------------------------------------------------------------------------

RowMatrix<double> gaussian_blobs(int per_cluster, int clusters, int dim, double separation, std::uint64_t seed,
                                 std::vector<int>& labels) {
  // Scaled basis vectors e_c * s / sqrt(2) are pairwise s apart.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix<double> x(per_cluster * clusters, dim);
  labels.assign(static_cast<std::size_t>(per_cluster * clusters), 0);
  for (int c = 0; c < clusters; ++c) {
    for (int i = 0; i < per_cluster; ++i) {
      const int r = c * per_cluster + i;
      for (int d = 0; d < dim; ++d) x(r, d) = normal(rng);
      x(r, c % dim) += separation / std::sqrt(2.0);
      labels[static_cast<std::size_t>(r)] = c;
    }
  }
  return x;
}

RowMatrix<double> uniform_points(int n, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RowMatrix<double> x(n, dim);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) x(i, d) = u(rng);
  return x;
}

const std::vector<Theme>& themes() {
  static const std::vector<Theme> list{
      {"guitar", {"fingerstyle", "fretboard", "capo", "strumming", "chords", "acoustic", "riff", "tuning"}},
      {"drums", {"snare", "cymbal", "groove", "paradiddle", "kick", "hihat", "fills", "tempo"}},
      {"piano", {"scales", "arpeggio", "chopin", "sonata", "pedal", "keys", "etude", "sightreading"}},
      {"jazz", {"bebop", "swing", "improvisation", "standards", "saxophone", "trumpet", "bossa", "blues"}},
      {"violin", {"bowing", "vibrato", "orchestra", "concerto", "rosin", "intonation", "fiddle", "strings"}},
      {"synth", {"modular", "oscillator", "ambient", "sequencer", "analog", "patch", "techno", "filter"}},
      {"sourdough", {"starter", "levain", "crumb", "proofing", "scoring", "hydration", "bread", "loaf"}},
      {"pasta", {"ragu", "carbonara", "lasagna", "gnocchi", "tagliatelle", "semolina", "pesto", "ravioli"}},
      {"baking", {"cake", "frosting", "cookies", "brownies", "pastry", "meringue", "oven", "butter"}},
      {"curry", {"masala", "turmeric", "cumin", "coconut", "lentils", "biryani", "chili", "spices"}},
      {"grilling", {"barbecue", "brisket", "smoker", "charcoal", "ribs", "marinade", "steak", "skewers"}},
      {"sushi", {"nigiri", "wasabi", "salmon", "maki", "rice", "nori", "sashimi", "tuna"}},
      {"running", {"marathon", "pace", "sneakers", "interval", "trail", "stride", "tempo", "endurance"}},
      {"yoga", {"asana", "breathing", "flexibility", "meditation", "stretch", "vinyasa", "posture", "balance"}},
      {"chess", {"opening", "gambit", "endgame", "checkmate", "bishop", "knight", "tactics", "grandmaster"}},
      {"astronomy", {"telescope", "galaxy", "nebula", "planets", "eclipse", "comet", "orbit", "supernova"}},
      {"gardening", {"compost", "tomatoes", "seedlings", "pruning", "soil", "mulch", "perennials", "harvest"}},
      {"woodworking", {"chisel", "dovetail", "lathe", "plywood", "sanding", "joinery", "walnut", "workbench"}},
      {"cycling", {"peloton", "gravel", "cadence", "derailleur", "climb", "helmet", "sprint", "saddle"}},
      {"photography", {"aperture", "shutter", "lens", "portrait", "exposure", "tripod", "bokeh", "mirrorless"}},
      {"python", {"pandas", "decorators", "asyncio", "numpy", "typing", "generators", "virtualenv", "pytest"}},
      {"finance", {"budget", "index", "dividends", "retirement", "savings", "stocks", "inflation", "mortgage"}},
      {"history", {"empire", "medieval", "revolution", "ancient", "dynasty", "archaeology", "castle", "roman"}},
      {"physics", {"quantum", "relativity", "particle", "entropy", "momentum", "photon", "gravity", "thermodynamics"}},
      {"gaming", {"speedrun", "boss", "walkthrough", "controller", "multiplayer", "quest", "loot", "esports"}},
      {"travel", {"backpacking", "itinerary", "hostel", "passport", "airport", "vlog", "island", "roadtrip"}},
      {"fitness", {"deadlift", "squat", "protein", "hypertrophy", "kettlebell", "bench", "cardio", "mobility"}},
      {"knitting", {"yarn", "stitch", "purl", "sweater", "needles", "wool", "crochet", "pattern"}},
      {"birds", {"warbler", "binoculars", "migration", "feeder", "owl", "sparrow", "heron", "birdsong"}},
      {"coffee", {"espresso", "roast", "grinder", "latte", "pourover", "crema", "arabica", "barista"}},
  };
  return list;
}

const std::vector<std::string> kMusicThemes{"guitar", "drums", "piano", "jazz", "violin", "synth"};
const std::vector<std::string> kCookingThemes{"sourdough", "pasta", "baking", "curry", "grilling", "sushi"};

namespace {

struct Draft {
  FootprintEvent event;
  int theme;
};

std::vector<Draft> draft_events(const SyntheticSpec& spec) {
  std::vector<int> pool;
  for (std::size_t t = 0; t < themes().size(); ++t)
    if (spec.themes.empty() ||
        std::find(spec.themes.begin(), spec.themes.end(), themes()[t].name) != spec.themes.end())
      pool.push_back(static_cast<int>(t));
  if (pool.empty()) throw std::invalid_argument("no matching themes");

  std::mt19937_64 rng(spec.seed);
  const auto span_ms = std::chrono::duration_cast<std::chrono::milliseconds>(spec.span).count();
  std::vector<Draft> out;
  out.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    const int t = pool[rng() % pool.size()];
    const auto& theme = themes()[static_cast<std::size_t>(t)];
    FootprintEvent e;
    e.platform = spec.platform;
    e.timestamp = spec.start + std::chrono::milliseconds(static_cast<long long>(rng() % static_cast<std::uint64_t>(span_ms)) / 1000 * 1000);
    std::string title = theme.name;
    for (int w = 0; w < 3; ++w) title += " " + theme.words[rng() % theme.words.size()];
    title += " " + std::to_string(i % 97);
    const bool search = spec.platform == ingest::Platform::YouTube &&
                        static_cast<double>(rng() % 10000) < spec.search_fraction * 10000.0;
    e.title = title;
    std::string channel = theme.name + " channel " + std::to_string(rng() % 5);
    if (spec.platform == ingest::Platform::Spotify) {
      e.kind = ingest::EventKind::Listened;
      e.channel_or_artist = channel;
      e.text_payload = title + " | " + channel;
    } else if (search) {
      e.kind = ingest::EventKind::Searched;
      e.text_payload = title;
    } else {
      e.kind = ingest::EventKind::Watched;
      char id[16];
      std::snprintf(id, sizeof id, "v%010zu", i);
      e.item_id = id;
      e.url = std::string("https://www.youtube.com/watch?v=") + id;
      e.channel_or_artist = channel;
      e.text_payload = title + " | " + channel;
    }
    out.push_back({std::move(e), t});
  }
  return out;
}

}  // namespace

std::vector<FootprintEvent> synthetic_events(const SyntheticSpec& spec, std::vector<int>* theme_of) {
  auto drafts = draft_events(spec);
  std::stable_sort(drafts.begin(), drafts.end(),
                   [](const Draft& a, const Draft& b) { return a.event.timestamp < b.event.timestamp; });
  std::vector<FootprintEvent> events;
  events.reserve(drafts.size());
  if (theme_of) theme_of->clear();
  for (auto& d : drafts) {
    events.push_back(std::move(d.event));
    if (theme_of) theme_of->push_back(d.theme);
  }
  ingest::finalize_events(events);
  return events;
}

std::string synthetic_takeout(const SyntheticSpec& spec) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& d : draft_events(spec)) {
    const auto& e = d.event;
    nlohmann::json rec{{"header", "YouTube"}, {"time", format_instant(e.timestamp)}, {"products", {"YouTube"}}};
    if (e.kind == ingest::EventKind::Searched) {
      rec["title"] = "Searched for " + e.title;
    } else {
      rec["title"] = "Watched " + e.title;
      rec["titleUrl"] = *e.url;
      rec["subtitles"] = nlohmann::json::array({{{"name", *e.channel_or_artist}}});
    }
    doc.push_back(std::move(rec));
  }
  return doc.dump();
}

std::vector<std::string> ThemeTopicProvider::topics_for(std::size_t, std::string_view text) {
  std::vector<std::string> out;
  for (const auto& t : themes()) {
    if (text.substr(0, t.name.size()) == t.name) {
      out.push_back(t.name);
      break;
    }
  }
  for (std::size_t i = 1; i < per_item_ && !out.empty(); ++i) out.push_back(out.front() + " extra " + std::to_string(i));
  return out;
}

store::MapDataset build_synthetic(const std::vector<FootprintEvent>& events, std::string dataset_id,
                                  const store::BuildConfig& config, std::size_t labels_per_item) {
  embed::LocalHashProvider local;
  store::Providers providers{&local, [labels_per_item] { return std::make_unique<ThemeTopicProvider>(labels_per_item); }};
  auto ds = store::assemble_dataset(events, config, providers);
  ds.manifest.dataset_id = std::move(dataset_id);
  return ds;
}

// ---------------------------------------------------------------------------

std::vector<std::vector<OracleNeighbor>> brute_knn(const RowMatrix<double>& x, reduce::Index k,
                                                   reduce::Metric metric) {
  const auto n = x.rows();
  std::vector<double> norms(static_cast<std::size_t>(n));
  for (reduce::Index i = 0; i < n; ++i) {
    double s = 0;
    for (reduce::Index d = 0; d < x.cols(); ++d) s += x(i, d) * x(i, d);
    norms[static_cast<std::size_t>(i)] = std::sqrt(s);
  }
  std::vector<std::vector<OracleNeighbor>> out(static_cast<std::size_t>(n));
  for (reduce::Index i = 0; i < n; ++i) {
    std::vector<OracleNeighbor> all;
    for (reduce::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      double dist = 0;
      if (metric == reduce::Metric::Euclidean) {
        for (reduce::Index d = 0; d < x.cols(); ++d) dist += (x(i, d) - x(j, d)) * (x(i, d) - x(j, d));
        dist = std::sqrt(dist);
      } else {
        double dot = 0;
        for (reduce::Index d = 0; d < x.cols(); ++d) dot += x(i, d) * x(j, d);
        dist = 1.0 - dot / (norms[static_cast<std::size_t>(i)] * norms[static_cast<std::size_t>(j)]);
      }
      all.push_back({j, dist});
    }
    std::sort(all.begin(), all.end(), [](const OracleNeighbor& a, const OracleNeighbor& b) {
      return a.distance != b.distance ? a.distance < b.distance : a.index < b.index;
    });
    all.resize(std::min<std::size_t>(all.size(), static_cast<std::size_t>(k)));
    out[static_cast<std::size_t>(i)] = std::move(all);
  }
  return out;
}

std::vector<int> kmeans(const reduce::Layout& points, int k, std::uint64_t seed, int restarts) {
  const auto n = points.rows();
  std::mt19937_64 rng(seed);
  std::vector<int> best;
  double best_inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Eigen::MatrixX2d centres(k, 2);
    centres.row(0) = points.row(static_cast<reduce::Index>(rng() % static_cast<std::uint64_t>(n)));
    for (int c = 1; c < k; ++c) {
      Eigen::VectorXd d2(n);
      for (reduce::Index i = 0; i < n; ++i)
        d2[i] = (centres.topRows(c).rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff();
      std::discrete_distribution<reduce::Index> pick(d2.data(), d2.data() + n);
      centres.row(c) = points.row(pick(rng));
    }
    std::vector<int> assign(static_cast<std::size_t>(n), -1);
    for (int iter = 0; iter < 100; ++iter) {
      bool changed = false;
      for (reduce::Index i = 0; i < n; ++i) {
        Eigen::Index c;
        (centres.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&c);
        if (assign[static_cast<std::size_t>(i)] != static_cast<int>(c)) {
          assign[static_cast<std::size_t>(i)] = static_cast<int>(c);
          changed = true;
        }
      }
      if (!changed) break;
      Eigen::MatrixX2d sum = Eigen::MatrixX2d::Zero(k, 2);
      Eigen::VectorXd cnt = Eigen::VectorXd::Zero(k);
      for (reduce::Index i = 0; i < n; ++i) {
        sum.row(assign[static_cast<std::size_t>(i)]) += points.row(i);
        cnt[assign[static_cast<std::size_t>(i)]] += 1;
      }
      for (int c = 0; c < k; ++c)
        if (cnt[c] > 0) centres.row(c) = sum.row(c) / cnt[c];
    }
    double inertia = 0;
    for (reduce::Index i = 0; i < n; ++i)
      inertia += (points.row(i) - centres.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best = assign;
    }
  }
  return best;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    ra[a[i]] += 1;
    rb[b[i]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double index = 0, sa = 0, sb = 0;
  for (const auto& [_, v] : joint) index += c2(v);
  for (const auto& [_, v] : ra) sa += c2(v);
  for (const auto& [_, v] : rb) sb += c2(v);
  const double expected = sa * sb / c2(static_cast<double>(a.size()));
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

bool boxes_overlap(const map::BBox& a, const map::BBox& b) {
  return std::min(a.max_x, b.max_x) > std::max(a.min_x, b.min_x) &&
         std::min(a.max_y, b.max_y) > std::max(a.min_y, b.min_y);
}

std::vector<std::size_t> greedy_labels(const topics::TopicTree& tree, const map::BBox& viewport, int zoom,
                                       const map::LabelMetrics& metrics, const std::vector<bool>& eligible) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    const bool inside = n.anchor.x() >= viewport.min_x && n.anchor.x() <= viewport.max_x &&
                        n.anchor.y() >= viewport.min_y && n.anchor.y() <= viewport.max_y;
    if (n.zoom_min <= zoom && inside && (eligible.empty() || eligible[i])) candidates.push_back(i);
  }
  std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    return tree.nodes[a].rank != tree.nodes[b].rank ? tree.nodes[a].rank < tree.nodes[b].rank : a < b;
  });
  const double scale = metrics.base_pixels_per_unit * std::pow(2.0, zoom);
  std::vector<std::size_t> kept;
  std::vector<map::BBox> boxes;
  for (std::size_t i : candidates) {
    const auto& n = tree.nodes[i];
    std::size_t chars = 0;
    for (unsigned char c : n.label) chars += (c & 0xC0) != 0x80;
    const double w = metrics.char_width_em * metrics.font_px * static_cast<double>(chars) / scale;
    const double h = metrics.line_height_em * metrics.font_px / scale;
    const map::BBox box{n.anchor.x() - w / 2, n.anchor.y() - h / 2, n.anchor.x() + w / 2, n.anchor.y() + h / 2};
    if (std::none_of(boxes.begin(), boxes.end(), [&](const map::BBox& b) { return boxes_overlap(b, box); })) {
      kept.push_back(i);
      boxes.push_back(box);
    }
  }
  return kept;
}

int months_spanned(Instant first, Instant last) {
  using namespace std::chrono;
  const year_month_day a{floor<days>(first)}, b{floor<days>(last)};
  return (int(b.year()) - int(a.year())) * 12 + (int(unsigned(b.month())) - int(unsigned(a.month()))) + 1;
}

}  // namespace mirror::test
