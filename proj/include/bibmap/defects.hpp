#pragma once

// Streaming defect sidecar. At dump scale a batch run must survive bad
// records, so readers report per-row and per-token problems here instead of
// aborting. Sidecar format: CSV with columns (input_file, line_no, reason).

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "bibmap/csv.hpp"
#include "bibmap/errors.hpp"

namespace bibmap {

class DefectLog {
public:
    /// Count-only log; nothing is written.
    DefectLog() = default;

    /// Log that streams rows to `sidecar_path`, creating parent directories.
    explicit DefectLog(const std::filesystem::path& sidecar_path) {
        std::error_code ec;
        if (sidecar_path.has_parent_path())
            std::filesystem::create_directories(sidecar_path.parent_path(), ec);
        out_ = std::make_unique<std::ofstream>(sidecar_path, std::ios::binary);
        if (!*out_) throw_io_failure("cannot open defect sidecar", sidecar_path.string());
        writer_ = std::make_unique<CsvWriter>(*out_);
        writer_->write_row({"input_file", "line_no", "reason"});
    }

    void report(const std::string& input_file, std::size_t line_no, const std::string& reason) {
        ++count_;
        if (writer_) writer_->write_row({input_file, std::to_string(line_no), reason});
    }

    std::uint64_t count() const { return count_; }

private:
    std::uint64_t count_ = 0;
    std::unique_ptr<std::ofstream> out_;
    std::unique_ptr<CsvWriter> writer_;
};

}  // namespace bibmap
