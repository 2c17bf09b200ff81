#pragma once

// Shared helpers for the test suites: scratch directories, fixture writers,
// and the independent oracles the specs are checked against.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "bibmap/errors.hpp"

namespace testutil {

/// Unique scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("bibmap_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }

    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }

    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw bibmap::IoFailureError("test fixture write failed: " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw bibmap::IoFailureError("test fixture read failed: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Independent ISSN oracle: brute-force mod-11 weighted sum over all eight
/// characters (weights 8..1, X=10), valid iff total % 11 == 0. Kept separate
/// from the library's check-digit computation on purpose.
inline bool issn_oracle_valid(const std::string& body8) {
    if (body8.size() != 8) return false;
    int total = 0;
    for (int i = 0; i < 8; ++i) {
        char c = body8[static_cast<std::size_t>(i)];
        int digit;
        if (c >= '0' && c <= '9') digit = c - '0';
        else if ((c == 'X' || c == 'x') && i == 7) digit = 10;
        else return false;
        total += digit * (8 - i);
    }
    return total % 11 == 0;
}

/// Render an 8-char ISSN body as the canonical hyphenated form.
inline std::string hyphenate_issn(const std::string& body8) {
    return body8.substr(0, 4) + "-" + body8.substr(4);
}

}  // namespace testutil
