#pragma once

// Persistent external-PID -> OpenAlex-ID index plus the metadata side-store,
// built once from a record stream and immutable afterwards. Layout:
//
//   index.dat   sorted lines "scheme:value\toa_id oa_id …" (ids sorted)
//   index.idx   sparse offsets, every Nth key: "key\tbyte_offset"
//   meta.dat    sorted lines "oa_id\t<record json>"
//   meta.idx    sparse offsets over meta.dat
//   MANIFEST.json  written last; its absence marks a partial build
//
// Lookups binary-search the in-memory sparse index and scan at most one
// block on disk. A single PID may map to several oa_ids; duplicates across
// records are exactly what Category A detects, so they are preserved
// (only identical (pid, oa_id) pairs collapse).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bibmap/defects.hpp"
#include "bibmap/errors.hpp"
#include "bibmap/extsort.hpp"
#include "bibmap/ingest.hpp"
#include "bibmap/pid.hpp"

namespace bibmap {

namespace detail {

inline constexpr int kIndexFormatVersion = 1;
inline constexpr std::size_t kSparseStride = 64;

struct SparseIndex {
    std::vector<std::string> keys;
    std::vector<std::uint64_t> offsets;

    /// Byte offset of the last block whose first key is <= key, or nullopt
    /// when key sorts before every block.
    std::optional<std::uint64_t> block_for(std::string_view key) const {
        auto it = std::upper_bound(keys.begin(), keys.end(), key,
                                   [](std::string_view k, const std::string& e) { return k < e; });
        if (it == keys.begin()) return std::nullopt;
        return offsets[static_cast<std::size_t>(it - keys.begin()) - 1];
    }
};

inline SparseIndex load_sparse(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io_failure("cannot open sparse index", path.string());
    SparseIndex sparse;
    std::string line;
    while (std::getline(in, line)) {
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw IoFailureError("corrupt sparse index: " + path.string());
        sparse.keys.emplace_back(line.substr(0, tab));
        sparse.offsets.push_back(std::stoull(line.substr(tab + 1)));
    }
    return sparse;
}

/// Scans one block of a sorted "key\tpayload" file for an exact key match.
inline std::optional<std::string> scan_block(std::ifstream& dat, std::uint64_t offset,
                                             std::string_view key) {
    dat.clear();
    dat.seekg(static_cast<std::streamoff>(offset));
    std::string line;
    for (std::size_t i = 0; i < kSparseStride && std::getline(dat, line); ++i) {
        auto tab = line.find('\t');
        if (tab == std::string::npos) continue;
        std::string_view k(line.data(), tab);
        if (k == key) return line.substr(tab + 1);
        if (k > key) break;  // sorted; key cannot follow
    }
    return std::nullopt;
}

}  // namespace detail

struct IndexBuildResult {
    std::uint64_t records_in = 0;
    std::uint64_t keys = 0;           // distinct (scheme, value) keys
    std::uint64_t pairs = 0;          // distinct (pid, oa_id) pairs
    std::uint64_t duplicate_records = 0;  // same oa_id seen again; first kept
};

/// Streams (pid -> oa_id) pairs and metadata records to sorted spill runs,
/// then merges them into the on-disk layout. Restart-safe: any files from an
/// interrupted build are discarded because MANIFEST.json is written last.
class IndexBuilder {
public:
    explicit IndexBuilder(std::filesystem::path dir, std::size_t memory_budget_bytes = 64ull << 20,
                          DefectLog* defects = nullptr)
        : dir_(std::move(dir)),
          defects_(defects),
          pair_sorter_(dir_ / "tmp", memory_budget_bytes / 2),
          meta_sorter_(dir_ / "tmp", memory_budget_bytes / 2) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        discard_previous();
    }

    void add(const OaRecord& rec) {
        ++result_.records_in;
        const auto& eligible = rec.kind == OaKind::work ? rec.pids : rec.issns;
        for (const auto& pid : eligible) {
            if (rec.kind == OaKind::work && !is_work_mapping_scheme(pid.scheme)) continue;
            if (rec.kind == OaKind::source && pid.scheme != PidScheme::issn) continue;
            pair_sorter_.add(pid.render() + '\t' + rec.oa_id.value);
        }
        // Sequence number keeps "first record wins" deterministic for
        // duplicate oa_ids.
        char seq[13];
        std::snprintf(seq, sizeof seq, "%012llu",
                      static_cast<unsigned long long>(result_.records_in));
        meta_sorter_.add(rec.oa_id.value + '\t' + seq + '\t' + oa_record_to_json(rec).dump());
    }

    IndexBuildResult finalize() {
        write_grouped(pair_sorter_, dir_ / "index.dat", dir_ / "index.idx");
        write_meta(meta_sorter_, dir_ / "meta.dat", dir_ / "meta.idx");
        nlohmann::json manifest;
        manifest["format_version"] = detail::kIndexFormatVersion;
        manifest["records"] = result_.records_in;
        manifest["keys"] = result_.keys;
        manifest["pairs"] = result_.pairs;
        manifest["duplicate_records"] = result_.duplicate_records;
        std::ofstream out(dir_ / "MANIFEST.json", std::ios::binary | std::ios::trunc);
        out << manifest.dump(2) << '\n';
        if (!out) throw_io_failure("manifest write failed", (dir_ / "MANIFEST.json").string());
        out.close();
        std::error_code ec;
        std::filesystem::remove_all(dir_ / "tmp", ec);
        return result_;
    }

    static bool index_exists(const std::filesystem::path& dir) {
        return std::filesystem::exists(dir / "MANIFEST.json");
    }

private:
    void discard_previous() {
        std::error_code ec;
        for (const char* f : {"MANIFEST.json", "index.dat", "index.idx", "meta.dat", "meta.idx"})
            std::filesystem::remove(dir_ / f, ec);
        std::filesystem::remove_all(dir_ / "tmp", ec);
        std::filesystem::create_directories(dir_ / "tmp", ec);
    }

    void write_grouped(ExternalLineSorter& sorter, const std::filesystem::path& dat_path,
                       const std::filesystem::path& idx_path) {
        std::ofstream dat(dat_path, std::ios::binary | std::ios::trunc);
        std::ofstream idx(idx_path, std::ios::binary | std::ios::trunc);
        if (!dat || !idx) throw_io_failure("cannot create index files", dat_path.string());
        auto it = sorter.finish();
        std::string line, key, ids, prev_line;
        std::uint64_t offset = 0;
        auto flush_key = [&] {
            if (key.empty()) return;
            if (result_.keys % detail::kSparseStride == 0)
                idx << key << '\t' << offset << '\n';
            std::string out_line = key + '\t' + ids + '\n';
            dat << out_line;
            offset += out_line.size();
            ++result_.keys;
        };
        while (it.next(line)) {
            if (line == prev_line) continue;  // identical (pid, oa_id) pair
            prev_line = line;
            ++result_.pairs;
            auto tab = line.find('\t');
            std::string_view k(line.data(), tab);
            std::string_view id(line.data() + tab + 1, line.size() - tab - 1);
            if (k != key) {
                flush_key();
                key.assign(k);
                ids.assign(id);
            } else {
                ids += ' ';
                ids += id;
            }
        }
        flush_key();
        if (!dat || !idx) throw_io_failure("index write failed", dat_path.string());
        sorter.cleanup();
    }

    void write_meta(ExternalLineSorter& sorter, const std::filesystem::path& dat_path,
                    const std::filesystem::path& idx_path) {
        std::ofstream dat(dat_path, std::ios::binary | std::ios::trunc);
        std::ofstream idx(idx_path, std::ios::binary | std::ios::trunc);
        if (!dat || !idx) throw_io_failure("cannot create meta files", dat_path.string());
        auto it = sorter.finish();
        std::string line, prev_id;
        std::uint64_t offset = 0, n = 0;
        while (it.next(line)) {
            auto tab1 = line.find('\t');
            auto tab2 = line.find('\t', tab1 + 1);
            std::string_view id(line.data(), tab1);
            if (id == prev_id) {
                ++result_.duplicate_records;
                if (defects_)
                    defects_->report("<index-build>", 0,
                                     "duplicate openalex id '" + std::string(id) +
                                         "'; first record kept");
                continue;
            }
            prev_id.assign(id);
            if (n % detail::kSparseStride == 0) idx << id << '\t' << offset << '\n';
            std::string out_line = std::string(id) + '\t' + line.substr(tab2 + 1) + '\n';
            dat << out_line;
            offset += out_line.size();
            ++n;
        }
        if (!dat || !idx) throw_io_failure("meta write failed", dat_path.string());
        sorter.cleanup();
    }

    std::filesystem::path dir_;
    DefectLog* defects_;
    ExternalLineSorter pair_sorter_;
    ExternalLineSorter meta_sorter_;
    IndexBuildResult result_;
};

/// Convenience wrapper over IndexBuilder for an in-memory record range.
template <typename Range>
IndexBuildResult build_index(const Range& records, const std::filesystem::path& dir,
                             DefectLog* defects = nullptr) {
    IndexBuilder builder(dir, 64ull << 20, defects);
    for (const auto& rec : records) builder.add(rec);
    return builder.finalize();
}

/// Read-only view of the PID -> oa_id map. Not thread-safe; open one
/// instance per reader thread (the on-disk layout is immutable).
class PidIndex {
public:
    static PidIndex open(const std::filesystem::path& dir) {
        if (!IndexBuilder::index_exists(dir))
            throw_io_failure("no finished index (MANIFEST.json missing)", dir.string());
        PidIndex idx;
        idx.sparse_ = detail::load_sparse(dir / "index.idx");
        idx.dat_.open(dir / "index.dat", std::ios::binary);
        if (!idx.dat_) throw_io_failure("cannot open index data", (dir / "index.dat").string());
        idx.dat_path_ = dir / "index.dat";
        return idx;
    }

    /// Sorted oa_ids for this pid; empty when absent, never an error.
    std::vector<std::string> lookup(const Pid& pid) const { return lookup_key(pid.render()); }

    std::vector<std::string> lookup_key(std::string_view key) const {
        auto block = sparse_.block_for(key);
        if (!block) return {};
        auto payload = detail::scan_block(dat_, *block, key);
        if (!payload) return {};
        std::vector<std::string> ids;
        std::size_t pos = 0;
        while (pos < payload->size()) {
            auto space = payload->find(' ', pos);
            if (space == std::string::npos) space = payload->size();
            ids.emplace_back(payload->substr(pos, space - pos));
            pos = space + 1;
        }
        return ids;
    }

    /// Streams every (scheme, value, oa_id) triple in key order.
    template <typename Fn>
    void for_each_triple(Fn&& fn) const {
        std::ifstream dat(dat_path_, std::ios::binary);
        std::string line;
        while (std::getline(dat, line)) {
            auto tab = line.find('\t');
            auto colon = line.find(':');
            std::string scheme = line.substr(0, colon);
            std::string value = line.substr(colon + 1, tab - colon - 1);
            std::size_t pos = tab + 1;
            while (pos < line.size()) {
                auto space = line.find(' ', pos);
                if (space == std::string::npos) space = line.size();
                fn(scheme, value, line.substr(pos, space - pos));
                pos = space + 1;
            }
        }
    }

private:
    detail::SparseIndex sparse_;
    mutable std::ifstream dat_;
    std::filesystem::path dat_path_;
};

/// Read-only oa_id -> OaRecord store. Same threading rule as PidIndex.
class MetaStore {
public:
    static MetaStore open(const std::filesystem::path& dir) {
        if (!IndexBuilder::index_exists(dir))
            throw_io_failure("no finished index (MANIFEST.json missing)", dir.string());
        MetaStore store;
        store.sparse_ = detail::load_sparse(dir / "meta.idx");
        store.dat_.open(dir / "meta.dat", std::ios::binary);
        if (!store.dat_) throw_io_failure("cannot open meta data", (dir / "meta.dat").string());
        return store;
    }

    OaRecord get(std::string_view oa_id) const {
        auto rec = try_get(oa_id);
        if (!rec) throw NotFoundError("no metadata record for '" + std::string(oa_id) + "'");
        return *rec;
    }

    std::optional<OaRecord> try_get(std::string_view oa_id) const {
        auto block = sparse_.block_for(oa_id);
        if (!block) return std::nullopt;
        auto payload = detail::scan_block(dat_, *block, oa_id);
        if (!payload) return std::nullopt;
        return oa_record_from_json(nlohmann::json::parse(*payload));
    }

private:
    detail::SparseIndex sparse_;
    mutable std::ifstream dat_;
};

}  // namespace bibmap
