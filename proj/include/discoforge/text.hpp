#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace discoforge {

inline std::vector<std::string> split(std::string_view s, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(delim, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline bool is_ws(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Splits on '\n' and drops a trailing '\r' per line, so CRLF input parses
// like LF input.
inline std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> lines = split(s, '\n');
    for (auto& line : lines)
        if (!line.empty() && line.back() == '\r') line.pop_back();
    return lines;
}

// Whitespace-delimited tokens; runs of whitespace collapse.
inline std::vector<std::string> tokenize_ws(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_ws(s[i])) ++i;
        std::size_t start = i;
        while (i < s.size() && !is_ws(s[i])) ++i;
        if (i > start) out.emplace_back(s.substr(start, i - start));
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && is_ws(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_ws(s.back())) s.remove_suffix(1);
    return s;
}

// ASCII-only case folding; multi-byte UTF-8 sequences pass through untouched.
inline std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

inline std::string collapse_ws(std::string_view s) {
    return join(tokenize_ws(s), " ");
}

// Replaces embedded tabs/newlines with single spaces so a field stays inside
// its TSV cell. Sets *changed when a replacement happened.
inline std::string sanitize_tsv_field(std::string_view s, bool* changed = nullptr) {
    std::string out(s);
    bool did = false;
    for (char& c : out) {
        if (c == '\t' || c == '\n' || c == '\r') {
            c = ' ';
            did = true;
        }
    }
    if (changed) *changed = did;
    return out;
}

inline bool parse_int(std::string_view s, int& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

inline bool parse_long(std::string_view s, long long& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

// Shortest round-trip decimal rendering, stable across runs.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

inline std::string format_fixed(double v, int places) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", places, v);
    return std::string(buf);
}

// Case-folded word types of a text, minus a stoplist.
inline std::set<std::string> word_types(std::string_view text, const std::set<std::string>& stoplist) {
    std::set<std::string> out;
    for (const auto& tok : tokenize_ws(text)) {
        std::string folded = to_lower_ascii(tok);
        if (!stoplist.count(folded)) out.insert(std::move(folded));
    }
    return out;
}

}  // namespace discoforge
