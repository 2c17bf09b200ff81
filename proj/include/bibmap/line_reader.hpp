#pragma once

// Line iteration over a byte stream with transparent gzip support. The
// compression is detected from the 0x1f 0x8b magic bytes, so callers never
// need to know whether a snapshot file was compressed. Trailing '\r' is
// stripped. Memory use: one inflate window plus one line.

#include <istream>
#include <string>
#include <vector>

#include <zlib.h>

#include "bibmap/errors.hpp"

namespace bibmap {

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {
        int c0 = in_.peek();
        if (c0 == 0x1f) {
            char magic[2];
            in_.read(magic, 2);
            gzip_ = in_.gcount() == 2 && static_cast<unsigned char>(magic[1]) == 0x8b;
            if (gzip_) {
                pending_.assign(magic, magic + 2);
                zs_.zalloc = Z_NULL;
                zs_.zfree = Z_NULL;
                zs_.opaque = Z_NULL;
                // 15+16 selects gzip framing
                if (inflateInit2(&zs_, 15 + 16) != Z_OK)
                    throw IoFailureError("zlib inflateInit failed");
            } else {
                for (int i = static_cast<int>(in_.gcount()) - 1; i >= 0; --i)
                    in_.putback(magic[i]);
            }
        }
    }

    ~LineReader() {
        if (gzip_) inflateEnd(&zs_);
    }

    LineReader(const LineReader&) = delete;
    LineReader& operator=(const LineReader&) = delete;

    /// Read the next line (without terminator). Returns false at EOF.
    bool next(std::string& line) {
        bool got = gzip_ ? next_gzip(line) : next_plain(line);
        if (got) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
        }
        return got;
    }

    /// 1-based number of the line most recently returned.
    std::size_t line_no() const { return line_no_; }

private:
    bool next_plain(std::string& line) {
        return static_cast<bool>(std::getline(in_, line));
    }

    bool next_gzip(std::string& line) {
        line.clear();
        while (true) {
            auto nl = decompressed_.find('\n', scan_pos_);
            if (nl != std::string::npos) {
                line.assign(decompressed_, scan_pos_, nl - scan_pos_);
                scan_pos_ = nl + 1;
                return true;
            }
            if (stream_end_) {
                if (scan_pos_ < decompressed_.size()) {
                    line.assign(decompressed_, scan_pos_, std::string::npos);
                    scan_pos_ = decompressed_.size();
                    return true;
                }
                return false;
            }
            // Compact consumed bytes, then inflate another chunk.
            if (scan_pos_ > 0) {
                decompressed_.erase(0, scan_pos_);
                scan_pos_ = 0;
            }
            inflate_chunk();
        }
    }

    void inflate_chunk() {
        if (pending_.empty()) {
            pending_.resize(kChunk);
            in_.read(pending_.data(), kChunk);
            pending_.resize(static_cast<std::size_t>(in_.gcount()));
            if (pending_.empty()) {
                // Truncated member: surface what zlib buffered, then stop.
                stream_end_ = true;
                return;
            }
        }
        zs_.next_in = reinterpret_cast<Bytef*>(pending_.data());
        zs_.avail_in = static_cast<uInt>(pending_.size());
        while (zs_.avail_in > 0) {
            std::size_t old = decompressed_.size();
            decompressed_.resize(old + kChunk);
            zs_.next_out = reinterpret_cast<Bytef*>(decompressed_.data() + old);
            zs_.avail_out = kChunk;
            int rc = inflate(&zs_, Z_NO_FLUSH);
            decompressed_.resize(old + (kChunk - zs_.avail_out));
            if (rc == Z_STREAM_END) {
                // Concatenated gzip members are valid; reset and continue.
                if (zs_.avail_in > 0 && inflateReset2(&zs_, 15 + 16) != Z_OK)
                    throw IoFailureError("zlib reset failed");
                if (zs_.avail_in == 0 && in_.peek() == EOF) {
                    stream_end_ = true;
                    break;
                }
                if (zs_.avail_in == 0) break;
            } else if (rc != Z_OK && rc != Z_BUF_ERROR) {
                throw IoFailureError("gzip stream corrupt (zlib rc " + std::to_string(rc) + ")");
            } else if (rc == Z_BUF_ERROR && zs_.avail_out == kChunk) {
                break;  // needs more input
            }
        }
        pending_.clear();
    }

    static constexpr std::size_t kChunk = 1 << 16;

    std::istream& in_;
    bool gzip_ = false;
    bool stream_end_ = false;
    z_stream zs_{};
    std::vector<char> pending_;
    std::string decompressed_;
    std::size_t scan_pos_ = 0;
    std::size_t line_no_ = 0;
};

}  // namespace bibmap
