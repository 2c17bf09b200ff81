#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "bibmap/errors.hpp"

namespace bibmap {

inline std::string_view trim_view(std::string_view s) {
    const char* ws = " \t\r\n\f\v";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::string trim(std::string_view s) { return std::string(trim_view(s)); }

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

inline bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        char a = s[i], b = prefix[i];
        if (a >= 'A' && a <= 'Z') a = static_cast<char>(a - 'A' + 'a');
        if (b >= 'A' && b <= 'Z') b = static_cast<char>(b - 'A' + 'a');
        if (a != b) return false;
    }
    return true;
}

inline bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

/// FNV-1a 64-bit over raw bytes. Used for compact duplicate tracking and
/// input/config fingerprints; not a cryptographic hash.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf, 16);
}

struct FileFingerprint {
    std::string path;
    std::uint64_t bytes = 0;
    std::string fnv1a;  // hex64 of file content hash
    bool operator==(const FileFingerprint&) const = default;
};

inline FileFingerprint fingerprint_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw_io_failure("cannot open for fingerprint", p.string());
    FileFingerprint fp;
    fp.path = p.string();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
        fp.bytes += static_cast<std::uint64_t>(in.gcount());
        if (in.eof()) break;
    }
    fp.fnv1a = hex64(h);
    return fp;
}

/// Space-joined rendering used for multi-target id lists.
inline std::string join_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) {
        if (!out.empty()) out += ' ';
        out += id;
    }
    return out;
}

/// Split a space-joined id list back into its elements.
inline std::vector<std::string> split_ids(std::string_view joined) {
    std::vector<std::string> ids;
    std::size_t pos = 0;
    while (pos < joined.size()) {
        auto space = joined.find(' ', pos);
        if (space == std::string_view::npos) space = joined.size();
        if (space > pos) ids.emplace_back(joined.substr(pos, space - pos));
        pos = space + 1;
    }
    return ids;
}

/// Percentage with one decimal place ("91.5"); 0 denominator renders "0.0".
inline std::string percent_1dp(std::uint64_t part, std::uint64_t whole) {
    double pct = whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", pct);
    return buf;
}

}  // namespace bibmap
