#include "mirror/core/error.hpp"
#include "mirror/core/hash.hpp"
#include "mirror/core/time.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace mirror {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedExport: return "MalformedExport";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::DegenerateGraph: return "DegenerateGraph";
    case ErrorCode::EmptyModel: return "EmptyModel";
    case ErrorCode::MissingPosition: return "MissingPosition";
    case ErrorCode::ProviderMismatch: return "ProviderMismatch";
    case ErrorCode::UnknownVersion: return "UnknownVersion";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownDataset: return "UnknownDataset";
    case ErrorCode::UnknownPoint: return "UnknownPoint";
    case ErrorCode::UnknownJob: return "UnknownJob";
    case ErrorCode::UnknownOverlay: return "UnknownOverlay";
    case ErrorCode::BadBBox: return "BadBBox";
    case ErrorCode::BadWindow: return "BadWindow";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Locked: return "Locked";
  }
  return "Unknown";
}

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return std::string(buf, 16);
}

namespace {

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  bool done() const { return pos_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }
  void skip() { ++pos_; }

  int digits(std::size_t count) {
    int value = 0;
    for (std::size_t i = 0; i < count; ++i) {
      if (done() || !std::isdigit(static_cast<unsigned char>(s_[pos_])))
        fail();
      value = value * 10 + (s_[pos_++] - '0');
    }
    return value;
  }

  void expect(char c) {
    if (peek() != c) fail();
    ++pos_;
  }

  [[noreturn]] void fail() const {
    throw std::invalid_argument("invalid timestamp: '" + std::string(s_) + "'");
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

Instant parse_instant(std::string_view text, std::chrono::minutes default_offset) {
  using namespace std::chrono;
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);

  Cursor c(text);
  const int y = c.digits(4);
  c.expect('-');
  const int mo = c.digits(2);
  c.expect('-');
  const int d = c.digits(2);
  int hh = 0, mm = 0, ss = 0, ms = 0;
  minutes offset = default_offset;

  if (!c.done()) {
    if (c.peek() != 'T' && c.peek() != ' ') c.fail();
    c.skip();
    hh = c.digits(2);
    c.expect(':');
    mm = c.digits(2);
    if (c.peek() == ':') {
      c.skip();
      ss = c.digits(2);
      if (c.peek() == '.' || c.peek() == ',') {
        c.skip();
        int scale = 100;
        bool any = false;
        while (std::isdigit(static_cast<unsigned char>(c.peek()))) {
          ms += (c.peek() - '0') * scale;
          scale /= 10;
          any = true;
          c.skip();
        }
        if (!any) c.fail();
      }
    }
    if (c.peek() == 'Z' || c.peek() == 'z') {
      c.skip();
      offset = minutes{0};
    } else if (c.peek() == '+' || c.peek() == '-') {
      const int sign = c.peek() == '-' ? -1 : 1;
      c.skip();
      const int oh = c.digits(2);
      if (c.peek() == ':') c.skip();
      const int om = c.digits(2);
      offset = minutes{sign * (oh * 60 + om)};
    }
    if (!c.done()) c.fail();
  }

  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) c.fail();
  const auto local = sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss} + milliseconds{ms};
  return time_point_cast<milliseconds>(local - offset);
}

std::string format_instant(Instant t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss tod{t - day_point};
  char buf[40];
  const long long msec = tod.subseconds().count();
  if (msec != 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03lldZ", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()), int(tod.hours().count()),
                  int(tod.minutes().count()), int(tod.seconds().count()), msec);
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()), int(tod.hours().count()),
                  int(tod.minutes().count()), int(tod.seconds().count()));
  }
  return buf;
}

Instant month_floor(Instant t) {
  using namespace std::chrono;
  const year_month_day ymd{floor<days>(t)};
  return Instant{sys_days{ymd.year() / ymd.month() / day{1}}};
}

Instant add_months(Instant month_start, int months) {
  using namespace std::chrono;
  const year_month_day ymd{floor<days>(month_start)};
  const auto shifted = year_month{ymd.year(), ymd.month()} + std::chrono::months{months};
  return Instant{sys_days{shifted / day{1}}} + (month_start - floor<days>(month_start));
}

}  // namespace mirror
