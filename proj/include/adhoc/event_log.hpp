// Copyright 2026 The adhoc-cloud Authors
// SPDX-License-Identifier: Apache-2.0
//
// Line-delimited event log shared by the server, clients and simulator:
//
//   <time> <Kind> key=value key=value ...
//
// Field order is the order of insertion, so identical runs print identical
// bytes. Numbers use the shortest representation that parses back exactly.

#pragma once

#include <charconv>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adhoc/domain.hpp"

namespace adhoc {

inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_number failed");
  return {buf, end};
}

inline std::optional<double> parse_number(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

template <class Range>
std::string join_ids(const Range& ids, char sep = ',') {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out.push_back(sep);
    out += id.str();
  }
  return out.empty() ? "-" : out;
}

struct LogRecord {
  SimTime time = 0.0;
  std::string kind;
  std::vector<std::pair<std::string, std::string>> fields;

  const std::string* find(std::string_view key) const {
    for (const auto& [k, v] : fields) {
      if (k == key) return &v;
    }
    return nullptr;
  }
  std::string text(std::string_view key) const {
    const auto* v = find(key);
    return v ? *v : std::string{};
  }
  double number(std::string_view key) const {
    const auto* v = find(key);
    if (!v) throw std::out_of_range("log record has no field " + std::string(key));
    auto n = parse_number(*v);
    if (!n) throw std::invalid_argument("log field " + std::string(key) + " is not numeric");
    return *n;
  }

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

inline std::string format_record(const LogRecord& r) {
  std::string out = format_number(r.time);
  out.push_back(' ');
  out += r.kind;
  for (const auto& [k, v] : r.fields) {
    out.push_back(' ');
    out += k;
    out.push_back('=');
    out += v;
  }
  return out;
}

inline LogRecord parse_record(std::string_view line) {
  LogRecord r;
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    auto next = line.find(' ', pos);
    if (next == std::string_view::npos) next = line.size();
    if (next > pos) tokens.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  if (tokens.size() < 2) throw ValidationError("event log line too short: " + std::string(line));
  auto t = parse_number(tokens[0]);
  if (!t) throw ValidationError("event log line has bad time: " + std::string(line));
  r.time = *t;
  r.kind = std::string(tokens[1]);
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    auto eq = tokens[i].find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("event log field without '=': " + std::string(tokens[i]));
    }
    r.fields.emplace_back(std::string(tokens[i].substr(0, eq)),
                          std::string(tokens[i].substr(eq + 1)));
  }
  return r;
}

class EventLog {
 public:
  using Field = std::pair<std::string, std::string>;

  void append(SimTime t, std::string kind, std::initializer_list<Field> fields) {
    records_.push_back({t, std::move(kind), {fields.begin(), fields.end()}});
  }
  void append(LogRecord r) { records_.push_back(std::move(r)); }

  const std::vector<LogRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

  void write(std::ostream& os) const {
    for (const auto& r : records_) os << format_record(r) << '\n';
  }
  std::string str() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

 private:
  std::vector<LogRecord> records_;
};

inline std::vector<LogRecord> parse_log(std::string_view text) {
  std::vector<LogRecord> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    if (!line.empty()) out.push_back(parse_record(line));
    pos = nl + 1;
  }
  return out;
}

inline EventLog::Field field(std::string key, std::string value) {
  return {std::move(key), std::move(value)};
}
inline EventLog::Field field(std::string key, const char* value) {
  return {std::move(key), value};
}
inline EventLog::Field field(std::string key, std::string_view value) {
  return {std::move(key), std::string(value)};
}
inline EventLog::Field field(std::string key, double value) {
  return {std::move(key), format_number(value)};
}
inline EventLog::Field field(std::string key, std::uint64_t value) {
  return {std::move(key), std::to_string(value)};
}
inline EventLog::Field field(std::string key, Count value) {
  return {std::move(key), std::to_string(value)};
}
inline EventLog::Field field(std::string key, bool value) {
  return {std::move(key), value ? "1" : "0"};
}
template <class Tag>
EventLog::Field field(std::string key, const Id<Tag>& id) {
  return {std::move(key), id.str()};
}

}  // namespace adhoc
