#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mirror {

enum class ErrorCode {
  MalformedExport,
  UnsupportedFormat,
  ProviderUnavailable,
  DimensionMismatch,
  EmptyText,
  DegenerateGraph,
  EmptyModel,
  MissingPosition,
  ProviderMismatch,
  UnknownVersion,
  InvalidArgument,
  UnknownDataset,
  UnknownPoint,
  UnknownJob,
  UnknownOverlay,
  BadBBox,
  BadWindow,
  IoError,
  Locked,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the whole engine. `stage` names the pipeline
// stage that failed, `record` the offending input record when known.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<long> record = std::nullopt)
      : std::runtime_error(message), code_(code), record_(record) {}

  ErrorCode code() const noexcept { return code_; }
  const std::optional<std::string>& stage() const noexcept { return stage_; }
  const std::optional<long>& record() const noexcept { return record_; }

  Error& with_stage(std::string stage) {
    stage_ = std::move(stage);
    return *this;
  }

 private:
  ErrorCode code_;
  std::optional<std::string> stage_;
  std::optional<long> record_;
};

}  // namespace mirror
