#include "trace.hpp"

#include <fstream>
#include <sstream>

#include "bytes.hpp"
#include "error.hpp"

namespace vanauth {
namespace {

constexpr int kTraceVersion = 1;

uint64_t mix_line(uint64_t digest, const std::string& line) {
    for (unsigned char ch : line) {
        digest ^= ch;
        digest *= 1099511628211ull;
    }
    digest ^= static_cast<unsigned char>('\n');
    digest *= 1099511628211ull;
    return digest;
}

Record parse_line(const std::string& line, size_t lineno) {
    Record rec = Record::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object() || !rec.contains("rec") || !rec["rec"].is_string())
        raise(Errc::CorruptTrace, "line " + std::to_string(lineno) + " is not a trace record");
    return rec;
}

}  // namespace

void TraceWriter::begin(uint64_t seed, const std::string& scenario_digest,
                        const std::string& variant) {
    if (begun_) raise(Errc::Internal, "trace already begun");
    begun_ = true;
    Record rec;
    rec["rec"] = "begin";
    rec["ver"] = kTraceVersion;
    rec["seed"] = seed;
    rec["scenario"] = scenario_digest;
    rec["variant"] = variant;
    push(std::move(rec));
}

void TraceWriter::event(Record rec) {
    if (!open()) raise(Errc::Internal, "trace not open");
    ++events_;
    push(std::move(rec));
}

void TraceWriter::end() {
    if (!open()) raise(Errc::Internal, "trace not open");
    ended_ = true;
    Record rec;
    rec["rec"] = "end";
    rec["events"] = events_;
    rec["digest"] = hex64(digest_);
    push(std::move(rec));
}

const std::string& TraceWriter::text() const {
    if (!ended_) raise(Errc::Internal, "trace still open");
    return text_;
}

void TraceWriter::push(Record rec) {
    std::string line = rec.dump();
    digest_ = mix_line(digest_, line);
    text_ += line;
    text_ += '\n';
}

ParsedTrace parse_trace(const std::string& text) {
    ParsedTrace out;
    if (text.empty()) return out;

    std::istringstream in(text);
    std::string line;
    uint64_t digest = 1469598103934665603ull;
    bool saw_begin = false;
    bool saw_end = false;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            raise(Errc::CorruptTrace, "blank line " + std::to_string(lineno));
        if (saw_end)
            raise(Errc::CorruptTrace, "records after the end marker");
        Record rec = parse_line(line, lineno);
        std::string kind = rec["rec"].get<std::string>();
        if (!saw_begin) {
            if (kind != "begin") raise(Errc::CorruptTrace, "first record is not the header");
            if (rec.value("ver", -1) != kTraceVersion)
                raise(Errc::CorruptTrace, "unsupported trace version");
            out.seed = rec.value("seed", 0ull);
            out.scenario_digest = rec.value("scenario", "");
            out.variant = rec.value("variant", "");
            saw_begin = true;
            digest = mix_line(digest, line);
            continue;
        }
        if (kind == "end") {
            if (rec.value("events", ~0ull) != out.events.size())
                raise(Errc::CorruptTrace, "footer event count disagrees with body");
            if (rec.value("digest", "") != hex64(digest))
                raise(Errc::CorruptTrace, "footer digest disagrees with body");
            saw_end = true;
            continue;
        }
        if (kind == "begin") raise(Errc::CorruptTrace, "second header record");
        digest = mix_line(digest, line);
        out.events.push_back(std::move(rec));
    }
    if (!saw_end) raise(Errc::CorruptTrace, "trace is truncated: no end marker");
    return out;
}

ParsedTrace load_trace_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::CorruptTrace, "cannot open trace file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_trace(buf.str());
}

}  // namespace vanauth
