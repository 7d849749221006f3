#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gaitgen {

// ---------------------------------------------------------------------------
// Error taxonomy. Every failure carries a stable kind string that the CLI
// propagates verbatim.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define GAITGEN_DEFINE_ERROR(Name)                                        \
    struct Name : Error {                                                 \
        explicit Name(const std::string& w) : Error(#Name, w) {}          \
    }

GAITGEN_DEFINE_ERROR(MissingFile);
GAITGEN_DEFINE_ERROR(SchemaMismatch);
GAITGEN_DEFINE_ERROR(InvariantViolation);
GAITGEN_DEFINE_ERROR(EmptyResult);
GAITGEN_DEFINE_ERROR(EmptyInput);
GAITGEN_DEFINE_ERROR(MixedChannels);
GAITGEN_DEFINE_ERROR(InsufficientCycles);
GAITGEN_DEFINE_ERROR(MissingMarker);
GAITGEN_DEFINE_ERROR(NoExtremumInWindow);
GAITGEN_DEFINE_ERROR(OrderingViolation);
GAITGEN_DEFINE_ERROR(RankDeficient);
GAITGEN_DEFINE_ERROR(AllZeroWeights);
GAITGEN_DEFINE_ERROR(InsufficientData);
GAITGEN_DEFINE_ERROR(NonPositiveResult);
GAITGEN_DEFINE_ERROR(NonMonotoneEvents);
GAITGEN_DEFINE_ERROR(IllConditionedSegment);
GAITGEN_DEFINE_ERROR(Unreachable);
GAITGEN_DEFINE_ERROR(StrokeLimit);
GAITGEN_DEFINE_ERROR(NoConvergence);
GAITGEN_DEFINE_ERROR(GridMismatch);
GAITGEN_DEFINE_ERROR(IoError);
GAITGEN_DEFINE_ERROR(ConfigError);

#undef GAITGEN_DEFINE_ERROR

// ---------------------------------------------------------------------------
// String helpers
// ---------------------------------------------------------------------------

inline std::string trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char delim) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = s.find(delim, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

inline std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

/// Strict double parse; the whole token must be consumed.
inline double parse_double(std::string_view tok, const std::string& context) {
    std::string t = trim(tok);
    if (t.empty()) throw SchemaMismatch("empty numeric field in " + context);
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE)
        throw SchemaMismatch("bad numeric value '" + t + "' in " + context);
    return v;
}

inline long parse_long(std::string_view tok, const std::string& context) {
    std::string t = trim(tok);
    long v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size())
        throw SchemaMismatch("bad integer value '" + t + "' in " + context);
    return v;
}

/// Shortest representation that round-trips a double exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = std::strtod(buf, nullptr);
    if (back == v) {
        // try shorter forms for readability, keeping exact round-trip
        for (int prec = 1; prec < 17; ++prec) {
            char b2[40];
            std::snprintf(b2, sizeof(b2), "%.*g", prec, v);
            if (std::strtod(b2, nullptr) == v) return b2;
        }
    }
    return buf;
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

inline std::string read_text_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw MissingFile(p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& p, const std::string& content) {
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + p.string());
    out << content;
    if (!out) throw IoError("write failed: " + p.string());
}

inline std::vector<std::string> read_lines(const std::filesystem::path& p) {
    std::string text = read_text_file(p);
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

// ---------------------------------------------------------------------------
// Key-value config files: `key = value`, '#' comments, order preserved.
// ---------------------------------------------------------------------------

class KeyValueFile {
public:
    KeyValueFile() = default;

    static KeyValueFile parse_text(const std::string& text, const std::string& origin) {
        KeyValueFile kv;
        kv.origin_ = origin;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::string t = trim(line);
            if (t.empty()) continue;
            auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
            std::string key = trim(t.substr(0, eq));
            std::string val = trim(t.substr(eq + 1));
            if (key.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
            kv.entries_.emplace_back(key, val);
            kv.index_[key] = kv.entries_.size() - 1;
        }
        return kv;
    }

    static KeyValueFile load(const std::filesystem::path& p) {
        return parse_text(read_text_file(p), p.string());
    }

    bool has(const std::string& key) const { return index_.count(key) > 0; }

    const std::string& get(const std::string& key) const {
        auto it = index_.find(key);
        if (it == index_.end())
            throw ConfigError(origin_ + ": missing key '" + key + "'");
        return entries_[it->second].second;
    }

    std::string get_or(const std::string& key, const std::string& fallback) const {
        auto it = index_.find(key);
        return it == index_.end() ? fallback : entries_[it->second].second;
    }

    double get_double(const std::string& key) const { return parse_double(get(key), origin_ + " key " + key); }

    double get_double_or(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    long get_long_or(const std::string& key, long fallback) const {
        return has(key) ? parse_long(get(key), origin_ + " key " + key) : fallback;
    }

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
    const std::string& origin() const { return origin_; }

private:
    std::string origin_ = "<memory>";
    std::vector<std::pair<std::string, std::string>> entries_;
    std::map<std::string, size_t> index_;
};

// ---------------------------------------------------------------------------
// FNV-1a, used for reproducibility hashes in reports and exports.
// ---------------------------------------------------------------------------

inline uint64_t fnv1a(std::string_view data, uint64_t seed = 0xcbf29ce484222325ull) {
    uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace gaitgen
