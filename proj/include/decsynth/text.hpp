#pragma once

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

namespace decsynth {

// Exact decimal rendering: 17 significant digits round-trip any binary64.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

// Human-facing rendering; integral values keep one decimal ("1.0").
inline std::string fmt_display(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    std::string s = buf;
    if (s.find_first_of(".eEni") == std::string::npos) s += ".0";
    return s;
}

inline bool parse_double(std::string_view sv, double& out) {
    std::string s(sv);
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && !s.empty();
}

inline bool parse_ll(std::string_view sv, long long& out) {
    auto res = std::from_chars(sv.data(), sv.data() + sv.size(), out);
    return res.ec == std::errc() && res.ptr == sv.data() + sv.size();
}

inline std::string_view trim(std::string_view s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string_view::npos) return {};
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    size_t start = 0;
    for (size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

// whitespace-separated tokens
inline std::vector<std::string_view> tokens(std::string_view s) {
    std::vector<std::string_view> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

} // namespace decsynth
