// Copyright 2026 The chaosbft Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chaosbft/sim/time.hpp"

namespace chaosbft {

/// One line of the event log: `tick,sequence,kind,node,detail`.
///
/// Dispatched events carry their own sequence number. Annotations written
/// while an event is being dispatched (sends, commits, drops, ...) reuse the
/// sequence of that event, so (tick, sequence) still orders the whole log.
struct LogRecord {
  std::uint64_t tick = 0;
  std::uint64_t sequence = 0;
  std::string kind;
  std::optional<NodeId> node;
  std::string detail;

  bool operator==(const LogRecord&) const = default;
};

inline void write_record(std::ostream& os, const LogRecord& r) {
  os << r.tick << ',' << r.sequence << ',' << r.kind << ',';
  if (r.node) {
    os << *r.node;
  } else {
    os << '-';
  }
  os << ',' << r.detail << '\n';
}

class LogFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses one log line. The detail column is everything after the fourth
/// comma and may itself be empty.
inline LogRecord parse_record(std::string_view line) {
  LogRecord r;
  std::size_t pos = 0;
  auto field = [&](bool last) -> std::string_view {
    if (last) {
      auto out = line.substr(pos);
      pos = line.size();
      return out;
    }
    auto comma = line.find(',', pos);
    if (comma == std::string_view::npos) throw LogFormatError("truncated log record: " + std::string(line));
    auto out = line.substr(pos, comma - pos);
    pos = comma + 1;
    return out;
  };
  auto to_u64 = [&](std::string_view s) {
    if (s.empty()) throw LogFormatError("empty numeric field: " + std::string(line));
    std::uint64_t v = 0;
    for (char c : s) {
      if (c < '0' || c > '9') throw LogFormatError("bad numeric field: " + std::string(line));
      v = v * 10 + static_cast<std::uint64_t>(c - '0');
    }
    return v;
  };
  r.tick = to_u64(field(false));
  r.sequence = to_u64(field(false));
  r.kind = std::string(field(false));
  auto node = field(false);
  if (node != "-") r.node = static_cast<NodeId>(to_u64(node));
  r.detail = std::string(field(true));
  return r;
}

class EventLog {
 public:
  void append(LogRecord r) { records_.push_back(std::move(r)); }

  const std::vector<LogRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  void write(std::ostream& os) const {
    for (const auto& r : records_) write_record(os, r);
  }

  std::string serialize() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

  /// Lines starting with '#' are headers and are skipped.
  static EventLog parse(std::string_view text) {
    EventLog log;
    std::size_t start = 0;
    while (start < text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      auto line = text.substr(start, end - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty() && line.front() != '#') log.append(parse_record(line));
      start = end + 1;
    }
    return log;
  }

 private:
  std::vector<LogRecord> records_;
};

/// Reads `key=value` out of a `;`-separated detail column.
inline std::optional<std::string_view> detail_field(std::string_view detail, std::string_view key) {
  std::size_t pos = 0;
  while (pos <= detail.size()) {
    auto end = detail.find(';', pos);
    if (end == std::string_view::npos) end = detail.size();
    auto item = detail.substr(pos, end - pos);
    auto eq = item.find('=');
    if (eq != std::string_view::npos && item.substr(0, eq) == key) return item.substr(eq + 1);
    pos = end + 1;
  }
  return std::nullopt;
}

}  // namespace chaosbft
