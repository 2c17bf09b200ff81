#pragma once

// External merge sort over text lines. Lines are buffered up to a memory
// budget, spilled as sorted runs, and merged with a k-way heap, so the peak
// footprint stays at the budget regardless of input size. Byte-wise line
// order; callers encode composite keys as tab-separated fields.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <queue>
#include <string>
#include <vector>

#include "bibmap/errors.hpp"

namespace bibmap {

class ExternalLineSorter {
public:
    explicit ExternalLineSorter(std::filesystem::path tmp_dir,
                                std::size_t memory_budget_bytes = 64ull << 20)
        : tmp_dir_(std::move(tmp_dir)), budget_(std::max<std::size_t>(memory_budget_bytes, 1 << 16)) {
        std::error_code ec;
        std::filesystem::create_directories(tmp_dir_, ec);
    }

    ~ExternalLineSorter() { cleanup(); }

    ExternalLineSorter(const ExternalLineSorter&) = delete;
    ExternalLineSorter& operator=(const ExternalLineSorter&) = delete;

    void add(std::string line) {
        buffered_bytes_ += line.size() + sizeof(std::string);
        buffer_.push_back(std::move(line));
        ++count_;
        if (buffered_bytes_ >= budget_) spill();
    }

    std::uint64_t count() const { return count_; }

    /// Sorted iteration over everything added. Call exactly once.
    class Iter {
    public:
        bool next(std::string& line) {
            if (heap_.empty()) return false;
            HeapItem top = heap_.top();
            heap_.pop();
            line = std::move(top.line);
            advance(top.source);
            return true;
        }

    private:
        friend class ExternalLineSorter;

        struct HeapItem {
            std::string line;
            std::size_t source;
            bool operator>(const HeapItem& o) const { return line > o.line; }
        };

        void add_source(std::unique_ptr<std::ifstream> file) {
            files_.push_back(std::move(file));
        }

        void start(std::vector<std::string> in_memory) {
            memory_ = std::move(in_memory);
            // Source 0 is the in-memory buffer; files follow.
            for (std::size_t s = 0; s <= files_.size(); ++s) advance(s);
        }

        void advance(std::size_t source) {
            if (source == 0) {
                if (mem_pos_ < memory_.size())
                    heap_.push(HeapItem{std::move(memory_[mem_pos_++]), 0});
                return;
            }
            std::string line;
            if (std::getline(*files_[source - 1], line))
                heap_.push(HeapItem{std::move(line), source});
        }

        std::vector<std::unique_ptr<std::ifstream>> files_;
        std::vector<std::string> memory_;
        std::size_t mem_pos_ = 0;
        std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap_;
    };

    Iter finish() {
        std::sort(buffer_.begin(), buffer_.end());
        Iter it;
        for (const auto& run : runs_) {
            auto f = std::make_unique<std::ifstream>(run, std::ios::binary);
            if (!*f) throw_io_failure("cannot reopen sort run", run.string());
            it.add_source(std::move(f));
        }
        it.start(std::move(buffer_));
        buffer_.clear();
        buffered_bytes_ = 0;
        return it;
    }

    void cleanup() {
        std::error_code ec;
        for (const auto& run : runs_) std::filesystem::remove(run, ec);
        runs_.clear();
    }

private:
    void spill() {
        std::sort(buffer_.begin(), buffer_.end());
        auto path = tmp_dir_ / ("run." + std::to_string(runs_.size()) + ".tmp");
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw_io_failure("cannot create sort run", path.string());
        for (const auto& line : buffer_) {
            out << line << '\n';
            if (!out) throw_io_failure("sort run write failed", path.string());
        }
        out.close();
        runs_.push_back(path);
        buffer_.clear();
        buffered_bytes_ = 0;
    }

    std::filesystem::path tmp_dir_;
    std::size_t budget_;
    std::vector<std::string> buffer_;
    std::size_t buffered_bytes_ = 0;
    std::vector<std::filesystem::path> runs_;
    std::uint64_t count_ = 0;
};

}  // namespace bibmap
