#pragma once

// The mapping pass: every source BR is assigned exactly one outcome by
// unioning index lookups over its mapping-eligible PIDs, and the three
// outcome tables are streamed to disk in input order. A second,
// external-sort pass over the emitted tables computes the inverted
// multi-mapping count (n:1 cases) with constant memory.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bibmap/csv.hpp"
#include "bibmap/errors.hpp"
#include "bibmap/extsort.hpp"
#include "bibmap/index.hpp"
#include "bibmap/ingest.hpp"

namespace bibmap {

enum class VerdictKind { one_to_one, multi_mapped, non_mapped };

/// Partition verdict for one BrRecord.
struct MappingOutcome {
    std::string omid;
    std::string br_type;
    VerdictKind verdict{};
    std::vector<std::string> oa_ids;  // 1 entry for 1:1; sorted, >=2 for multi
    bool had_supported_pids = false;  // any mapping-eligible PID present
    bool had_any_pid = false;         // any external PID at all (ISBN included)
    bool mixed_kind = false;          // multi row mixing W and S targets
};

struct MappingStats {
    std::uint64_t processed = 0;
    std::uint64_t with_supported_pids = 0;
    std::uint64_t one_to_one = 0;
    std::uint64_t multi_mapped = 0;
    std::uint64_t non_mapped_with_pids = 0;
    std::uint64_t non_mapped_without_pids = 0;
    std::map<std::uint64_t, std::uint64_t> multiplicity_histogram;  // n (>=2) -> count
    std::uint64_t inverted_multi_omids = 0;

    bool operator==(const MappingStats&) const = default;
};

inline nlohmann::json mapping_stats_to_json(const MappingStats& s) {
    nlohmann::json j;
    j["processed"] = s.processed;
    j["with_supported_pids"] = s.with_supported_pids;
    j["one_to_one"] = s.one_to_one;
    j["multi_mapped"] = s.multi_mapped;
    j["non_mapped_with_pids"] = s.non_mapped_with_pids;
    j["non_mapped_without_pids"] = s.non_mapped_without_pids;
    auto hist = nlohmann::json::array();
    for (auto [n, count] : s.multiplicity_histogram) hist.push_back({n, count});
    j["multiplicity_histogram"] = hist;
    j["inverted_multi_omids"] = s.inverted_multi_omids;
    return j;
}

inline MappingStats mapping_stats_from_json(const nlohmann::json& j) {
    MappingStats s;
    s.processed = j.at("processed").get<std::uint64_t>();
    s.with_supported_pids = j.at("with_supported_pids").get<std::uint64_t>();
    s.one_to_one = j.at("one_to_one").get<std::uint64_t>();
    s.multi_mapped = j.at("multi_mapped").get<std::uint64_t>();
    s.non_mapped_with_pids = j.at("non_mapped_with_pids").get<std::uint64_t>();
    s.non_mapped_without_pids = j.at("non_mapped_without_pids").get<std::uint64_t>();
    for (const auto& entry : j.at("multiplicity_histogram"))
        s.multiplicity_histogram[entry.at(0).get<std::uint64_t>()] =
            entry.at(1).get<std::uint64_t>();
    s.inverted_multi_omids = j.at("inverted_multi_omids").get<std::uint64_t>();
    return s;
}

/// Union the index hits over all mapping-eligible PIDs of `br`. Set-union
/// semantics: a target found via two schemes counts once, so the verdict is
/// insensitive to PID order.
inline MappingOutcome map_record(const BrRecord& br, const PidIndex& index) {
    MappingOutcome out;
    out.omid = br.omid.value;
    out.br_type = br.br_type;
    out.had_any_pid = !br.pids.empty();
    std::set<std::string> hits;
    for (const auto& pid : br.pids) {
        if (!is_mapping_eligible(pid.scheme)) continue;
        out.had_supported_pids = true;
        for (auto& id : index.lookup(pid)) hits.insert(std::move(id));
    }
    if (hits.empty()) {
        out.verdict = VerdictKind::non_mapped;
        return out;
    }
    out.oa_ids.assign(hits.begin(), hits.end());
    if (out.oa_ids.size() == 1) {
        out.verdict = VerdictKind::one_to_one;
        return out;
    }
    out.verdict = VerdictKind::multi_mapped;
    bool has_w = false, has_s = false;
    for (const auto& id : out.oa_ids) (id[0] == 'W' ? has_w : has_s) = true;
    out.mixed_kind = has_w && has_s;
    return out;
}

inline std::string bool_field(bool b) { return b ? "true" : "false"; }

/// Group all (omid, oa_id) pairs from the 1:1 and multi tables by oa_id and
/// count the distinct omids whose group holds >= 2 distinct omids. Emits the
/// grouping table (qualifying groups only) to `groups_csv`.
inline std::uint64_t inverted_multimap_count(const std::filesystem::path& one_to_one_csv,
                                             const std::filesystem::path& multi_csv,
                                             const std::filesystem::path& groups_csv,
                                             const std::filesystem::path& tmp_dir,
                                             std::size_t memory_budget_bytes = 64ull << 20) {
    ExternalLineSorter pairs(tmp_dir, memory_budget_bytes);
    auto feed = [&](const std::filesystem::path& table, bool multi) {
        std::ifstream in(table, std::ios::binary);
        if (!in) throw_io_failure("cannot open mapping table", table.string());
        CsvReader csv(in);
        std::vector<std::string> row;
        if (!csv.next_row(row)) return;  // header (empty table is fine)
        while (csv.next_row(row)) {
            if (row.size() < 2) continue;
            if (!multi) {
                pairs.add(row[1] + '\t' + row[0]);
            } else {
                std::size_t pos = 0;
                const std::string& ids = row[1];
                while (pos < ids.size()) {
                    auto space = ids.find(' ', pos);
                    if (space == std::string::npos) space = ids.size();
                    pairs.add(ids.substr(pos, space - pos) + '\t' + row[0]);
                    pos = space + 1;
                }
            }
        }
    };
    feed(one_to_one_csv, false);
    feed(multi_csv, true);

    std::ofstream groups_out(groups_csv, std::ios::binary | std::ios::trunc);
    if (!groups_out) throw_io_failure("cannot create groups table", groups_csv.string());
    CsvWriter groups(groups_out);
    groups.write_row({"openalex_id", "omid_count", "omids"});

    ExternalLineSorter members(tmp_dir, memory_budget_bytes);
    auto it = pairs.finish();
    std::string line, cur_id;
    std::vector<std::string> cur_omids;
    auto flush_group = [&] {
        if (cur_omids.size() >= 2) {
            groups.write_row({cur_id, std::to_string(cur_omids.size()),
                              join_ids(cur_omids)});
            for (const auto& o : cur_omids) members.add(o);
        }
        cur_omids.clear();
    };
    while (it.next(line)) {
        auto tab = line.find('\t');
        std::string_view oa_id(line.data(), tab);
        std::string_view omid(line.data() + tab + 1, line.size() - tab - 1);
        if (oa_id != cur_id) {
            flush_group();
            cur_id.assign(oa_id);
        }
        // Pairs are unique per construction (1:1/multi tables partition
        // omids and multi id lists are deduplicated), so no within-group
        // dedup is needed.
        cur_omids.emplace_back(omid);
    }
    flush_group();
    pairs.cleanup();

    // An omid may sit in several qualifying groups; count it once.
    std::uint64_t distinct = 0;
    auto mit = members.finish();
    std::string prev;
    while (mit.next(line)) {
        if (line != prev) {
            ++distinct;
            prev = line;
        }
    }
    members.cleanup();
    return distinct;
}

/// Drive map_record over a BrRecord stream, writing the three outcome tables
/// and stats.json into out_dir. Row order equals input order per table.
template <typename BrSource>
MappingStats run_mapping(BrSource& brs, const PidIndex& index,
                         const std::filesystem::path& out_dir,
                         std::size_t memory_budget_bytes = 64ull << 20) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::ofstream oto_f(out_dir / "one_to_one.csv", std::ios::binary | std::ios::trunc);
    std::ofstream multi_f(out_dir / "multi_mapped.csv", std::ios::binary | std::ios::trunc);
    std::ofstream non_f(out_dir / "non_mapped.csv", std::ios::binary | std::ios::trunc);
    if (!oto_f || !multi_f || !non_f)
        throw_io_failure("cannot create outcome tables", out_dir.string());
    CsvWriter oto(oto_f), multi(multi_f), non(non_f);
    oto.write_row({"omid", "openalex_id", "type"});
    multi.write_row({"omid", "openalex_id", "type"});
    non.write_row({"omid", "type", "had_supported_pids", "had_any_pid"});

    MappingStats stats;
    while (auto br = brs.next()) {
        MappingOutcome out = map_record(*br, index);
        ++stats.processed;
        if (out.had_supported_pids) ++stats.with_supported_pids;
        switch (out.verdict) {
            case VerdictKind::one_to_one:
                ++stats.one_to_one;
                oto.write_row({out.omid, out.oa_ids[0], out.br_type});
                break;
            case VerdictKind::multi_mapped:
                ++stats.multi_mapped;
                ++stats.multiplicity_histogram[out.oa_ids.size()];
                multi.write_row({out.omid, join_ids(out.oa_ids), out.br_type});
                break;
            case VerdictKind::non_mapped:
                if (out.had_supported_pids) ++stats.non_mapped_with_pids;
                else ++stats.non_mapped_without_pids;
                non.write_row({out.omid, out.br_type, bool_field(out.had_supported_pids),
                               bool_field(out.had_any_pid)});
                break;
        }
    }
    oto_f.close();
    multi_f.close();
    non_f.close();

    stats.inverted_multi_omids = inverted_multimap_count(
        out_dir / "one_to_one.csv", out_dir / "multi_mapped.csv",
        out_dir / "inverted_groups.csv", out_dir / "tmp", memory_budget_bytes);
    std::filesystem::remove_all(out_dir / "tmp", ec);

    std::ofstream stats_f(out_dir / "stats.json", std::ios::binary | std::ios::trunc);
    stats_f << mapping_stats_to_json(stats).dump(2) << '\n';
    if (!stats_f) throw_io_failure("stats write failed", (out_dir / "stats.json").string());
    return stats;
}

}  // namespace bibmap
