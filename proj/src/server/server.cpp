#include "mirror/server/server.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <charconv>

#include <fmt/format.h>

#include "mirror/store/render.hpp"

namespace mirror::server {

using nlohmann::json;
using store::BuildStage;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownDataset:
    case ErrorCode::UnknownPoint:
    case ErrorCode::UnknownJob:
    case ErrorCode::UnknownOverlay: return 404;
    case ErrorCode::BadBBox:
    case ErrorCode::BadWindow:
    case ErrorCode::InvalidArgument:
    case ErrorCode::MalformedExport:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::EmptyText: return 400;
    case ErrorCode::ProviderMismatch:
    case ErrorCode::Locked: return 409;
    case ErrorCode::ProviderUnavailable: return 503;
    case ErrorCode::DimensionMismatch:
    case ErrorCode::DegenerateGraph:
    case ErrorCode::EmptyModel:
    case ErrorCode::MissingPosition:
    case ErrorCode::UnknownVersion:
    case ErrorCode::IoError: return 500;
  }
  return 500;
}

json api_error(const Error& e) {
  json body{{"status", http_status(e.code())}, {"code", to_string(e.code())}, {"message", e.what()}};
  if (e.stage()) body["stage"] = *e.stage();
  if (e.record()) body["record"] = *e.record();
  return {{"error", body}};
}

json to_json(const JobStatus& job) {
  json out{{"job_id", job.job_id}, {"status", store::to_string(job.stage)}};
  if (job.dataset_id) out["dataset_id"] = *job.dataset_id;
  if (job.stage == BuildStage::Done) out["reused"] = job.reused;
  if (job.error) out["error"] = (*job.error)["error"];
  return out;
}

std::optional<map::TimeWindow> parse_window(const std::optional<std::string>& from,
                                            const std::optional<std::string>& to) {
  if (!from && !to) return std::nullopt;
  auto parse = [](const std::string& text, const char* which) {
    try {
      return parse_instant(text);
    } catch (const std::invalid_argument&) {
      throw Error(ErrorCode::BadWindow, std::string("'") + which + "' is not an ISO-8601 instant: " + text);
    }
  };
  const Instant start = from ? parse(*from, "from") : Instant::min();
  const Instant end = to ? parse(*to, "to") : Instant::max();
  return map::make_window(start, end);
}

namespace {

std::optional<std::string> param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

long long parse_integer(const std::string& text, const char* name) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw Error(ErrorCode::InvalidArgument, std::string("'") + name + "' must be an integer");
  return v;
}

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> levels;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find(',', pos), text.size());
    const std::string part = text.substr(pos, end - pos);
    char* stop = nullptr;
    const double v = std::strtod(part.c_str(), &stop);
    if (part.empty() || stop != part.c_str() + part.size() || !std::isfinite(v))
      throw Error(ErrorCode::InvalidArgument, "'levels' must be comma-separated numbers");
    if (!levels.empty() && !(v > levels.back()))
      throw Error(ErrorCode::InvalidArgument, "'levels' must be strictly increasing");
    levels.push_back(v);
    pos = end + 1;
  }
  return levels;
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

// {dataset_id, count, points} written without an intermediate json tree.
// Doubles use the shortest round-trip form.
void send_points(httplib::Response& res, const std::string& dataset_id, const std::vector<store::ViewportPoint>& points) {
  std::string body;
  body.reserve(96 * points.size() + 128);
  auto out = std::back_inserter(body);
  fmt::format_to(out, "{{\"dataset_id\":{},\"count\":{},\"points\":[", json(dataset_id).dump(), points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    fmt::format_to(out, "{}{{\"event_id\":\"{}\",\"kind\":\"{}\",\"platform\":\"{}\",\"x\":{},\"y\":{}}}",
                   i ? "," : "", p.event_id, ingest::to_string(p.kind), ingest::to_string(p.platform), p.x, p.y);
  }
  body += "]}";
  res.status = 200;
  res.set_content(std::move(body), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_json(res, api_error(e), http_status(e.code()));
    } catch (const json::exception& e) {
      send_json(res, api_error(Error(ErrorCode::InvalidArgument, std::string("bad JSON: ") + e.what())), 400);
    } catch (const std::exception& e) {
      send_json(res, api_error(Error(ErrorCode::IoError, e.what())), 500);
    }
  };
}

/// Build settings a client may override per upload.
void apply_overrides(store::BuildConfig& config, const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "build config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "name") config.name = value.get<std::string>();
    else if (key == "seed") config.reducer.layout.seed = value.get<std::uint64_t>();
    else if (key == "k") config.reducer.k = value.get<reduce::Index>();
    else if (key == "epochs") config.reducer.layout.epochs = value.get<int>();
    else if (key == "min_dist") config.reducer.layout.min_dist = value.get<double>();
    else if (key == "metric") config.reducer.metric = reduce::metric_from_string(value.get<std::string>());
    else throw Error(ErrorCode::InvalidArgument, "unknown build config key '" + key + "'");
  }
}

}  // namespace

Server::Server(store::DatasetStore& store, ServerOptions options, ProviderSet providers)
    : store_(store), options_(std::move(options)), providers_(std::move(providers)),
      http_(std::make_unique<httplib::Server>()) {
  const auto threads = std::max<std::size_t>(1, options_.threads);
  http_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  routes();
  worker_ = std::thread([this] { worker_loop(); });
}

Server::~Server() {
  stop();
  {
    std::lock_guard lock(jobs_mutex_);
    stopping_ = true;
  }
  jobs_changed_.notify_all();
  if (worker_.joinable()) worker_.join();
}

bool Server::listen() {
  if (options_.port == 0) {
    bound_port_ = http_->bind_to_any_port(options_.bind);
  } else {
    bound_port_ = http_->bind_to_port(options_.bind, options_.port) ? options_.port : -1;
  }
  if (bound_port_ < 0) return false;
  spdlog::info("serving on http://{}:{}", options_.bind, bound_port_);
  return http_->listen_after_bind();
}

int Server::start() {
  bound_port_ = options_.port == 0 ? http_->bind_to_any_port(options_.bind)
                                   : (http_->bind_to_port(options_.bind, options_.port) ? options_.port : -1);
  if (bound_port_ < 0) return -1;
  listener_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  return bound_port_;
}

void Server::stop() {
  if (http_) http_->stop();
  if (listener_.joinable()) listener_.join();
}

std::string Server::submit_build(std::vector<store::RawInput> inputs, store::BuildConfig config) {
  std::lock_guard lock(jobs_mutex_);
  const std::string id = "job-" + std::to_string(next_job_++);
  JobStatus status;
  status.job_id = id;
  jobs_[id] = std::move(status);
  queue_.push_back({id, std::move(inputs), std::move(config)});
  jobs_changed_.notify_all();
  return id;
}

JobStatus Server::job(const std::string& job_id) const {
  std::lock_guard lock(jobs_mutex_);
  const auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw Error(ErrorCode::UnknownJob, "no job with id '" + job_id + "'");
  return it->second;
}

JobStatus Server::wait(const std::string& job_id) const {
  std::unique_lock lock(jobs_mutex_);
  const auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw Error(ErrorCode::UnknownJob, "no job with id '" + job_id + "'");
  jobs_changed_.wait(lock, [&] {
    const auto stage = jobs_.at(job_id).stage;
    return stage == BuildStage::Done || stage == BuildStage::Failed;
  });
  return jobs_.at(job_id);
}

void Server::advance(const std::string& job_id, BuildStage stage) {
  std::lock_guard lock(jobs_mutex_);
  auto& job = jobs_.at(job_id);
  const bool terminal = job.stage == BuildStage::Done || job.stage == BuildStage::Failed;
  if (!terminal && static_cast<int>(stage) > static_cast<int>(job.stage)) job.stage = stage;
  jobs_changed_.notify_all();
}

void Server::worker_loop() {
  for (;;) {
    Pending next;
    {
      std::unique_lock lock(jobs_mutex_);
      jobs_changed_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      next = std::move(queue_.front());
      queue_.pop_front();
    }
    store::Providers providers{providers_.embedding.get(), providers_.make_topics};
    try {
      // Done is recorded below, together with the dataset id.
      auto result = store::build_dataset(store_, next.inputs, next.config, providers, [&](BuildStage s) {
        if (s != BuildStage::Done) advance(next.job_id, s);
      });
      std::lock_guard lock(jobs_mutex_);
      auto& job = jobs_.at(next.job_id);
      job.dataset_id = result.dataset_id;
      job.reused = result.reused;
      job.stage = BuildStage::Done;
    } catch (const Error& e) {
      spdlog::warn("build {} failed: {}", next.job_id, e.what());
      std::lock_guard lock(jobs_mutex_);
      auto& job = jobs_.at(next.job_id);
      job.error = api_error(e);
      job.stage = BuildStage::Failed;
    } catch (const std::exception& e) {
      spdlog::warn("build {} failed: {}", next.job_id, e.what());
      std::lock_guard lock(jobs_mutex_);
      auto& job = jobs_.at(next.job_id);
      job.error = api_error(Error(ErrorCode::IoError, e.what()));
      job.stage = BuildStage::Failed;
    }
    jobs_changed_.notify_all();
  }
}

std::shared_ptr<const map::DensityGrid> Server::density_for(const store::MapDataset& ds,
                                                            const std::optional<map::TimeWindow>& window) const {
  const std::string key = ds.manifest.dataset_id + "|" +
                          (window ? std::to_string(window->start.time_since_epoch().count()) + "|" +
                                        std::to_string(window->end.time_since_epoch().count())
                                  : std::string("all"));
  {
    std::lock_guard lock(density_mutex_);
    if (const auto it = density_cache_.find(key); it != density_cache_.end()) return it->second;
  }
  auto grid = std::make_shared<const map::DensityGrid>(store::window_density(ds, window));
  std::lock_guard lock(density_mutex_);
  if (density_cache_.size() >= 256) density_cache_.clear();
  return density_cache_.try_emplace(key, std::move(grid)).first->second;
}

void Server::routes() {
  auto& s = *http_;
  const std::string origin = options_.cors_origin;
  s.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
  });
  s.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.status == 404 && res.body.empty())
      send_json(res, {{"error", {{"status", 404}, {"code", "NotFound"}, {"message", "no such route"}}}}, 404);
  });

  s.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) { send_json(res, {{"ok", true}}); }));

  s.Get("/legend", guarded([](const httplib::Request&, httplib::Response& res) {
    json sources = json::array();
    for (auto p : {ingest::Platform::YouTube, ingest::Platform::Spotify}) {
      const auto& st = ingest::source_style_of(p);
      sources.push_back({{"platform", ingest::to_string(p)}, {"color", st.color_name}, {"hex", st.color_hex}});
    }
    send_json(res, {{"kinds", store::kind_legend()}, {"sources", sources}});
  }));

  s.Post("/datasets", guarded([this](const httplib::Request& req, httplib::Response& res) {
    std::vector<store::RawInput> inputs;
    store::BuildConfig config = options_.build;
    if (req.is_multipart_form_data()) {
      for (const auto& [name, file] : req.files) {
        if (name == "export") inputs.push_back({file.filename.empty() ? "export" : file.filename, file.content});
        else if (name == "transcripts") config.transcripts = file.content;
        else if (name == "config") apply_overrides(config, json::parse(file.content));
        else throw Error(ErrorCode::InvalidArgument, "unknown form field '" + name + "'");
      }
    } else if (!req.body.empty()) {
      inputs.push_back({param(req, "name").value_or("export"), req.body});
    }
    if (inputs.empty()) throw Error(ErrorCode::InvalidArgument, "upload needs at least one 'export' file");
    const auto id = submit_build(std::move(inputs), std::move(config));
    send_json(res, to_json(job(id)), 202);
  }));

  s.Get(R"(/jobs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    send_json(res, to_json(job(req.matches[1])));
  }));

  s.Get("/datasets", guarded([this](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& m : store_.list()) list.push_back(store::to_json(m));
    send_json(res, {{"datasets", list}});
  }));

  s.Get(R"(/datasets/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    send_json(res, store::to_json(store_.get(req.matches[1])->manifest));
  }));

  auto bbox_of = [](const httplib::Request& req, const store::MapDataset& ds) {
    const auto text = param(req, "bbox");
    return text ? map::parse_bbox(*text) : ds.density.extent;
  };

  s.Get(R"(/datasets/([^/]+)/points)", guarded([this, bbox_of](const httplib::Request& req, httplib::Response& res) {
    const auto ds = store_.get(req.matches[1]);
    const auto box = bbox_of(req, *ds);
    const auto window = parse_window(param(req, "from"), param(req, "to"));
    send_points(res, ds->manifest.dataset_id, store::query_viewport(*ds, box, window));
  }));

  s.Get(R"(/datasets/([^/]+)/points/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto ds = store_.get(req.matches[1]);
    const auto row = ds->row(req.matches[2]);
    send_json(res, store::event_detail(ds->events[row], ds->assignments[row], ds->positions(), row));
  }));

  s.Get(R"(/datasets/([^/]+)/labels)", guarded([this, bbox_of](const httplib::Request& req, httplib::Response& res) {
    const auto ds = store_.get(req.matches[1]);
    const auto box = bbox_of(req, *ds);
    const auto zoom_text = param(req, "zoom");
    const int zoom = zoom_text ? static_cast<int>(parse_integer(*zoom_text, "zoom")) : 0;
    const auto window = parse_window(param(req, "from"), param(req, "to"));
    json labels = json::array();
    for (const auto& l : store::viewport_labels(*ds, box, zoom, window, options_.label_metrics))
      labels.push_back(store::to_json(l));
    send_json(res, {{"dataset_id", ds->manifest.dataset_id}, {"zoom", zoom}, {"labels", labels}});
  }));

  s.Get(R"(/datasets/([^/]+)/contours)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto ds = store_.get(req.matches[1]);
    const auto window = parse_window(param(req, "from"), param(req, "to"));
    const auto grid = density_for(*ds, window);
    const auto levels_text = param(req, "levels");
    const auto levels = levels_text ? parse_levels(*levels_text) : map::default_levels(*grid);
    json contours = json::array();
    for (const auto& c : map::contour_lines(*grid, levels)) contours.push_back(store::to_json(c));
    send_json(res, {{"dataset_id", ds->manifest.dataset_id},
                    {"levels", levels},
                    {"bandwidth", grid->bandwidth},
                    {"contours", contours}});
  }));

  s.Get(R"(/datasets/([^/]+)/summary)", guarded([this, bbox_of](const httplib::Request& req, httplib::Response& res) {
    const auto ds = store_.get(req.matches[1]);
    const auto box = bbox_of(req, *ds);
    const auto window = parse_window(param(req, "from"), param(req, "to"));
    const auto seed_text = param(req, "seed");
    const auto seed = static_cast<std::uint64_t>(seed_text ? parse_integer(*seed_text, "seed") : 0);
    std::vector<std::size_t> rows;
    for (const auto& p : store::query_viewport(*ds, box, window)) rows.push_back(p.row);
    const auto items = store::summary_items(*ds, rows);
    std::unique_ptr<map::SummaryProvider> provider =
        providers_.make_summary ? providers_.make_summary() : std::make_unique<map::StubSummaryProvider>();
    send_json(res, store::to_json(map::summarize_viewport(items, options_.summary_sample_size, *provider, seed)));
  }));

  s.Get(R"(/datasets/([^/]+)/frames)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto ds = store_.get(req.matches[1]);
    const auto step = param(req, "step").value_or("month");
    if (step != "month") throw Error(ErrorCode::InvalidArgument, "only step=month is supported");
    const auto mode_text = param(req, "mode").value_or("cumulative");
    map::FrameMode mode;
    if (mode_text == "cumulative") mode = map::FrameMode::Cumulative;
    else if (mode_text == "monthly") mode = map::FrameMode::Monthly;
    else throw Error(ErrorCode::InvalidArgument, "mode must be cumulative or monthly");
    std::optional<Instant> from;
    if (const auto f = param(req, "from")) {
      try {
        from = parse_instant(*f);
      } catch (const std::invalid_argument&) {
        throw Error(ErrorCode::BadWindow, "'from' is not an ISO-8601 instant: " + *f);
      }
    }
    json frames = json::array();
    for (const auto& w : map::animation_frames(ds->events, from, mode)) {
      auto j = store::to_json(w);
      j["count"] = map::filter_by_time(ds->events, w).size();
      frames.push_back(std::move(j));
    }
    send_json(res, {{"dataset_id", ds->manifest.dataset_id}, {"step", step}, {"mode", mode_text}, {"frames", frames}});
  }));

  s.Post("/overlays", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body);
    const auto target = store_.get(body.at("target_id").get<std::string>());
    const auto other = store_.get(body.at("other_id").get<std::string>());
    const auto overlay = store::overlay_datasets(*target, *other);
    store::save_overlay(store_, overlay);
    send_json(res,
              {{"overlay_id", overlay.overlay_id},
               {"target_id", overlay.target_id},
               {"other_id", overlay.other_id},
               {"target_count", overlay.points.size() - overlay.other_count},
               {"other_count", overlay.other_count}},
              201);
  }));

  s.Get(R"(/overlays/([^/]+)/points)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto overlay = store::load_overlay(store_, req.matches[1]);
    const auto text = param(req, "bbox");
    const map::BBox box = text ? map::parse_bbox(*text)
                               : map::BBox{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                                           std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    json points = json::array();
    for (const auto& p : store::query_overlay(overlay, box)) points.push_back(store::to_json(p));
    send_json(res, {{"overlay_id", overlay.overlay_id}, {"count", points.size()}, {"points", points}});
  }));
}

}  // namespace mirror::server
