#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mirror/map/summary.hpp"
#include "mirror/store/build.hpp"
#include "mirror/store/overlay.hpp"

namespace httplib {
class Server;
}

namespace mirror::server {

struct ServerOptions {
  std::string bind = "127.0.0.1";
  int port = 8787;
  std::string cors_origin = "*";
  std::size_t summary_sample_size = 20;
  std::size_t threads = 8;
  map::LabelMetrics label_metrics;
  store::BuildConfig build;  // defaults for uploaded builds
};

struct ProviderSet {
  std::shared_ptr<embed::EmbeddingProvider> embedding;
  std::function<std::unique_ptr<topics::TopicProvider>()> make_topics;
  std::function<std::unique_ptr<map::SummaryProvider>()> make_summary;
};

/// HTTP status for an engine error code.
int http_status(ErrorCode code);
/// {"error": {"status", "code", "message", "stage"?, "record"?}}
nlohmann::json api_error(const Error& e);

struct JobStatus {
  std::string job_id;
  store::BuildStage stage = store::BuildStage::Queued;
  std::optional<std::string> dataset_id;
  bool reused = false;
  std::optional<nlohmann::json> error;  // api_error body when failed
};

nlohmann::json to_json(const JobStatus& job);

/// Parses an optional [from, to) pair of ISO-8601 query values. A missing
/// bound is open. Throws Error{BadWindow}.
std::optional<map::TimeWindow> parse_window(const std::optional<std::string>& from,
                                            const std::optional<std::string>& to);

/// JSON API over a DatasetStore. Builds run one at a time on a background
/// worker; read routes share immutable loaded datasets.
class Server {
 public:
  Server(store::DatasetStore& store, ServerOptions options, ProviderSet providers);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and serves until stop(). Port 0 picks a free port.
  bool listen();
  /// Binds, then serves on a background thread; returns the bound port or -1.
  int start();
  void stop();
  int port() const { return bound_port_; }

  std::string submit_build(std::vector<store::RawInput> inputs, store::BuildConfig config);
  /// Throws Error{UnknownJob}.
  JobStatus job(const std::string& job_id) const;
  /// Blocks until the job reaches done or failed.
  JobStatus wait(const std::string& job_id) const;

 private:
  void routes();
  void worker_loop();
  void advance(const std::string& job_id, store::BuildStage stage);
  std::shared_ptr<const map::DensityGrid> density_for(const store::MapDataset& ds,
                                                      const std::optional<map::TimeWindow>& window) const;

  store::DatasetStore& store_;
  ServerOptions options_;
  ProviderSet providers_;
  std::unique_ptr<httplib::Server> http_;
  std::thread listener_;
  int bound_port_ = -1;

  mutable std::mutex jobs_mutex_;
  mutable std::condition_variable jobs_changed_;
  std::map<std::string, JobStatus> jobs_;
  struct Pending {
    std::string job_id;
    std::vector<store::RawInput> inputs;
    store::BuildConfig config;
  };
  std::deque<Pending> queue_;
  std::uint64_t next_job_ = 1;
  bool stopping_ = false;
  std::thread worker_;

  mutable std::mutex density_mutex_;
  mutable std::map<std::string, std::shared_ptr<const map::DensityGrid>> density_cache_;
};

}  // namespace mirror::server
