#pragma once

// Incremental RFC-4180 CSV reading and writing. The reader is a character
// level state machine so quoted fields may contain commas, escaped quotes,
// and embedded line breaks; memory use is one row at a time.

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bibmap/errors.hpp"

namespace bibmap {

class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    /// Read the next logical row into `fields`. Returns false at EOF.
    /// line_no() afterwards gives the physical line the row started on.
    bool next_row(std::vector<std::string>& fields) {
        fields.clear();
        std::streambuf* buf = in_.rdbuf();
        int c = buf->sbumpc();
        if (c == EOF) return false;
        row_start_line_ = current_line_;
        std::string field;
        bool in_quotes = false;
        bool row_done = false;
        while (!row_done) {
            if (in_quotes) {
                if (c == EOF) throw IoFailureError("csv: EOF inside quoted field");
                if (c == '"') {
                    int peek = buf->sgetc();
                    if (peek == '"') {
                        field += '"';
                        buf->sbumpc();
                    } else {
                        in_quotes = false;
                    }
                } else {
                    if (c == '\n') ++current_line_;
                    field += static_cast<char>(c);
                }
            } else {
                switch (c) {
                    case '"': in_quotes = true; break;
                    case ',':
                        fields.push_back(std::move(field));
                        field.clear();
                        break;
                    case '\r':
                        if (buf->sgetc() == '\n') buf->sbumpc();
                        ++current_line_;
                        row_done = true;
                        break;
                    case '\n':
                        ++current_line_;
                        row_done = true;
                        break;
                    case EOF: row_done = true; break;
                    default: field += static_cast<char>(c);
                }
            }
            if (!row_done) c = buf->sbumpc();
        }
        fields.push_back(std::move(field));
        if (!bom_checked_) {
            bom_checked_ = true;
            if (fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
        }
        return true;
    }

    /// Physical 1-based line number on which the last row started.
    std::size_t line_no() const { return row_start_line_; }

private:
    std::istream& in_;
    std::size_t current_line_ = 1;
    std::size_t row_start_line_ = 1;
    bool bom_checked_ = false;
};

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void write_row(std::span<const std::string> fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            write_field(fields[i]);
        }
        out_ << '\n';
        if (!out_) throw_io_failure("csv write failed", "<stream>");
    }

    void write_row(std::initializer_list<std::string> fields) {
        write_row(std::span<const std::string>(fields.begin(), fields.size()));
    }

private:
    void write_field(const std::string& f) {
        bool needs_quotes = f.find_first_of(",\"\r\n") != std::string::npos;
        if (!needs_quotes) {
            out_ << f;
            return;
        }
        out_ << '"';
        for (char c : f) {
            if (c == '"') out_ << '"';
            out_ << c;
        }
        out_ << '"';
    }

    std::ostream& out_;
};

}  // namespace bibmap
