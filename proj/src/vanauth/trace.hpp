#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace vanauth {

using Record = nlohmann::ordered_json;

// Accumulates one structured record per line. The header goes first, the
// footer last; the footer carries the record count and a running digest of
// every preceding line so a truncated or edited file is detectable.
class TraceWriter {
  public:
    void begin(uint64_t seed, const std::string& scenario_digest, const std::string& variant);
    void event(Record rec);
    void end();

    bool open() const { return begun_ && !ended_; }
    const std::string& text() const;
    uint64_t event_count() const { return events_; }

  private:
    void push(Record rec);

    std::string text_;
    uint64_t events_ = 0;
    uint64_t digest_ = 1469598103934665603ull;  // FNV-1a offset basis
    bool begun_ = false;
    bool ended_ = false;
};

struct ParsedTrace {
    uint64_t seed = 0;
    std::string scenario_digest;
    std::string variant;
    std::vector<Record> events;
};

// Parses a full trace. Throws CorruptTrace when the header or footer is
// missing, a line is not valid, or the footer count/digest disagree with
// the body. An entirely empty text parses to an empty trace.
ParsedTrace parse_trace(const std::string& text);

ParsedTrace load_trace_file(const std::string& path);

}  // namespace vanauth
