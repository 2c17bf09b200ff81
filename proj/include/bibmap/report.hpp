#pragma once

// Run summary assembly. Every number is recomputed from the emitted table
// files and cross-checked against the cached stats; a mismatch means a
// pipeline bug and is surfaced as InconsistentOutputs rather than papered
// over. Rendering is deterministic: identical summaries produce identical
// bytes, with wall-clock timings kept in a separate field tests can strip.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bibmap/classifier.hpp"
#include "bibmap/csv.hpp"
#include "bibmap/errors.hpp"
#include "bibmap/extsort.hpp"
#include "bibmap/mapper.hpp"
#include "bibmap/provenance.hpp"
#include "bibmap/util.hpp"
#include "bibmap/version.hpp"

namespace bibmap {

struct RunSummary {
    std::string tool_version = kToolVersion;
    MappingStats mapping;
    bool has_classification = false;
    CategoryMatrix works;
    CategoryMatrix sources;
    std::uint64_t mixed_rows = 0;
    bool has_provenance = false;
    ProvenanceMatrix provenance;
    std::map<std::string, std::string> config_fingerprints;
    std::vector<FileFingerprint> input_fingerprints;
    std::map<std::string, std::uint64_t> timings_ms;

    bool operator==(const RunSummary&) const = default;
};

enum class ReportFormat { text, json };

namespace detail {

inline CategoryMatrix category_matrix_from_json(const nlohmann::json& j) {
    CategoryMatrix m;
    for (const auto& row : j.at("rows")) {
        std::string type = row.at("type").get<std::string>();
        for (auto it = row.begin(); it != row.end(); ++it) {
            if (it.key() == "type") continue;
            auto cat = category_from_tag(it.key());
            if (!cat) continue;
            auto count = it.value().get<std::uint64_t>();
            if (count > 0) m.cells[{type, *cat}] = count;
        }
    }
    return m;
}

inline ProvenanceMatrix provenance_matrix_from_json(const nlohmann::json& j) {
    ProvenanceMatrix m;
    for (const auto& cell : j.at("cells")) {
        m.cells[{cell.at("source_set").get<std::string>(), cell.at("has_pid").get<bool>(),
                 cell.at("type").get<std::string>()}] = cell.at("count").get<std::uint64_t>();
    }
    m.joined = j.at("joined").get<std::uint64_t>();
    m.unknown = j.at("unknown").get<std::uint64_t>();
    return m;
}

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io_failure("cannot open", path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw IoFailureError("unparseable json: " + path.string());
    return j;
}

struct TableCounts {
    std::uint64_t one_to_one = 0;
    std::uint64_t multi = 0;
    std::uint64_t non_with = 0;
    std::uint64_t non_without = 0;
    std::map<std::uint64_t, std::uint64_t> histogram;
    std::uint64_t inverted = 0;
};

inline TableCounts recount_tables(const std::filesystem::path& out_dir) {
    TableCounts counts;
    auto for_each_row = [](const std::filesystem::path& p, auto&& fn) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw_io_failure("cannot open table", p.string());
        CsvReader csv(in);
        std::vector<std::string> row;
        if (!csv.next_row(row)) throw IoFailureError("table has no header: " + p.string());
        while (csv.next_row(row)) fn(row);
    };
    for_each_row(out_dir / "one_to_one.csv", [&](const std::vector<std::string>&) {
        ++counts.one_to_one;
    });
    for_each_row(out_dir / "multi_mapped.csv", [&](const std::vector<std::string>& row) {
        ++counts.multi;
        if (row.size() > 1) ++counts.histogram[split_ids(row[1]).size()];
    });
    for_each_row(out_dir / "non_mapped.csv", [&](const std::vector<std::string>& row) {
        if (row.size() > 2 && row[2] == "true") ++counts.non_with;
        else ++counts.non_without;
    });
    // Distinct omids across qualifying groups; one omid may sit in several.
    ExternalLineSorter omids(out_dir / "tmp", 64ull << 20);
    for_each_row(out_dir / "inverted_groups.csv", [&](const std::vector<std::string>& row) {
        if (row.size() > 2)
            for (auto& o : split_ids(row[2])) omids.add(std::move(o));
    });
    auto it = omids.finish();
    std::string line, prev;
    while (it.next(line)) {
        if (line != prev) {
            ++counts.inverted;
            prev = line;
        }
    }
    omids.cleanup();
    std::error_code ec;
    std::filesystem::remove_all(out_dir / "tmp", ec);
    return counts;
}

}  // namespace detail

/// Rebuild the run summary from the table files in out_dir. The mapper
/// outputs are required; classifier and provenance outputs are summarized
/// when present. Throws InconsistentOutputs when a recount disagrees with
/// stats.json or an emitted matrix.
inline RunSummary build_summary(const std::filesystem::path& out_dir) {
    if (!std::filesystem::exists(out_dir / "stats.json"))
        throw MissingPhaseOutputsError("no stats.json in " + out_dir.string() +
                                       "; run the map phase first");
    RunSummary summary;
    MappingStats cached = mapping_stats_from_json(detail::load_json_file(out_dir / "stats.json"));
    detail::TableCounts counts = detail::recount_tables(out_dir);

    auto mismatch = [&](const std::string& what, std::uint64_t table, std::uint64_t stats) {
        throw InconsistentOutputsError("recount mismatch on " + what + ": tables say " +
                                       std::to_string(table) + ", stats.json says " +
                                       std::to_string(stats));
    };
    if (counts.one_to_one != cached.one_to_one)
        mismatch("one_to_one", counts.one_to_one, cached.one_to_one);
    if (counts.multi != cached.multi_mapped) mismatch("multi_mapped", counts.multi, cached.multi_mapped);
    if (counts.non_with != cached.non_mapped_with_pids)
        mismatch("non_mapped_with_pids", counts.non_with, cached.non_mapped_with_pids);
    if (counts.non_without != cached.non_mapped_without_pids)
        mismatch("non_mapped_without_pids", counts.non_without, cached.non_mapped_without_pids);
    if (counts.histogram != cached.multiplicity_histogram)
        throw InconsistentOutputsError("recount mismatch on multiplicity histogram");
    if (counts.inverted != cached.inverted_multi_omids)
        mismatch("inverted_multi_omids", counts.inverted, cached.inverted_multi_omids);
    std::uint64_t with_pids = counts.one_to_one + counts.multi + counts.non_with;
    if (with_pids != cached.with_supported_pids)
        mismatch("with_supported_pids", with_pids, cached.with_supported_pids);
    if (with_pids + counts.non_without != cached.processed)
        mismatch("processed", with_pids + counts.non_without, cached.processed);
    summary.mapping = cached;

    if (std::filesystem::exists(out_dir / "verdicts.csv")) {
        summary.has_classification = true;
        CategoryMatrix works, sources;
        std::uint64_t verdict_rows = 0;
        std::ifstream in(out_dir / "verdicts.csv", std::ios::binary);
        CsvReader csv(in);
        std::vector<std::string> row;
        csv.next_row(row);  // header
        // Verdict rows re-keyed by type require the multi table; join omid->type.
        std::map<std::string, std::string> type_of;
        {
            std::ifstream multi_in(out_dir / "multi_mapped.csv", std::ios::binary);
            CsvReader multi_csv(multi_in);
            std::vector<std::string> mrow;
            multi_csv.next_row(mrow);
            while (multi_csv.next_row(mrow))
                if (mrow.size() > 2) type_of[mrow[0]] = mrow[2];
        }
        while (csv.next_row(row)) {
            if (row.size() < 4) continue;
            ++verdict_rows;
            auto cat = category_from_tag(row[3]);
            if (!cat)
                throw InconsistentOutputsError("verdicts.csv has unknown category '" + row[3] +
                                               "'");
            auto type_it = type_of.find(row[0]);
            std::string br_type = type_it == type_of.end() ? std::string() : type_it->second;
            if (row[2] == "work") works.add(br_type, *cat);
            else sources.add(br_type, *cat);
        }
        summary.mixed_rows = counts.multi - verdict_rows;
        auto check_matrix = [&](const CategoryMatrix& recounted,
                                const std::vector<Category>& cats,
                                const std::filesystem::path& path) {
            CategoryMatrix emitted;
            std::ifstream min(path, std::ios::binary);
            if (!min) throw_io_failure("cannot open matrix", path.string());
            CsvReader mcsv(min);
            std::vector<std::string> header;
            mcsv.next_row(header);
            std::vector<std::string> mrow;
            while (mcsv.next_row(mrow)) {
                if (mrow.empty() || mrow[0] == "total") continue;
                for (std::size_t i = 1; i < mrow.size() && i < header.size(); ++i) {
                    auto cat = category_from_tag(header[i]);
                    auto count = std::stoull(mrow[i]);
                    if (cat && count > 0) emitted.cells[{mrow[0], *cat}] = count;
                }
            }
            (void)cats;
            if (!(emitted == recounted))
                throw InconsistentOutputsError("matrix recount disagrees with " + path.string());
        };
        check_matrix(works, work_categories(), out_dir / "works_matrix.csv");
        check_matrix(sources, source_categories(), out_dir / "sources_matrix.csv");
        summary.works = std::move(works);
        summary.sources = std::move(sources);
    }

    if (std::filesystem::exists(out_dir / "provenance_matrix.csv")) {
        summary.has_provenance = true;
        ProvenanceMatrix prov;
        {
            std::ifstream in(out_dir / "provenance_matrix.csv", std::ios::binary);
            if (!in) throw_io_failure("cannot open provenance matrix",
                                      (out_dir / "provenance_matrix.csv").string());
            CsvReader csv(in);
            std::vector<std::string> header, row;
            csv.next_row(header);
            while (csv.next_row(row)) {
                if (row.size() < 2) continue;
                bool has_pid = row[1] == "yes";
                for (std::size_t i = 2; i < row.size() && i < header.size(); ++i) {
                    std::string type = header[i] == "<unspecified>" ? std::string() : header[i];
                    auto count = std::stoull(row[i]);
                    if (count > 0) prov.cells[{row[0], has_pid, type}] = count;
                }
            }
        }
        nlohmann::json meta = detail::load_json_file(out_dir / "provenance_meta.json");
        prov.joined = meta.at("joined").get<std::uint64_t>();
        prov.unknown = meta.at("unknown").get<std::uint64_t>();
        if (prov.total() != prov.joined)
            throw InconsistentOutputsError("provenance matrix cells disagree with joined count");
        std::uint64_t non_mapped_rows = counts.non_with + counts.non_without;
        if (prov.joined + prov.unknown != non_mapped_rows)
            throw InconsistentOutputsError(
                "provenance join conservation violated: joined " + std::to_string(prov.joined) +
                " + unknown " + std::to_string(prov.unknown) + " != non-mapped " +
                std::to_string(non_mapped_rows));
        summary.provenance = std::move(prov);
    }

    // Phase sidecars contribute fingerprints and timings when present.
    for (const char* meta_name : {"index_meta.json", "map_meta.json", "classify_meta.json",
                                  "provenance_meta.json"}) {
        auto path = out_dir / meta_name;
        if (!std::filesystem::exists(path)) continue;
        nlohmann::json meta = detail::load_json_file(path);
        if (auto it = meta.find("inputs"); it != meta.end())
            for (const auto& input : *it)
                summary.input_fingerprints.push_back(FileFingerprint{
                    input.at("path").get<std::string>(), input.at("bytes").get<std::uint64_t>(),
                    input.at("fnv1a").get<std::string>()});
        if (auto it = meta.find("duration_ms"); it != meta.end()) {
            std::string phase(meta_name);
            phase = phase.substr(0, phase.find("_meta"));
            summary.timings_ms[phase] = it->get<std::uint64_t>();
        }
        if (auto it = meta.find("config_fingerprints"); it != meta.end())
            for (auto fp = it->begin(); fp != it->end(); ++fp)
                summary.config_fingerprints[fp.key()] = fp.value().get<std::string>();
    }
    return summary;
}

inline nlohmann::json run_summary_to_json(const RunSummary& s) {
    nlohmann::json j;
    j["tool_version"] = s.tool_version;
    j["phases"] = {{"map", true}, {"classify", s.has_classification},
                   {"provenance", s.has_provenance}};
    j["mapping"] = mapping_stats_to_json(s.mapping);
    if (s.has_classification) {
        j["classification"] = {
            {"works", category_matrix_to_json(s.works, work_categories())},
            {"sources", category_matrix_to_json(s.sources, source_categories())},
            {"mixed_rows", s.mixed_rows}};
    } else {
        j["classification"] = nullptr;
    }
    j["provenance"] = s.has_provenance ? provenance_matrix_to_json(s.provenance)
                                       : nlohmann::json(nullptr);
    j["config_fingerprints"] = s.config_fingerprints;
    auto inputs = nlohmann::json::array();
    for (const auto& fp : s.input_fingerprints)
        inputs.push_back({{"path", fp.path}, {"bytes", fp.bytes}, {"fnv1a", fp.fnv1a}});
    j["input_fingerprints"] = inputs;
    j["timings_ms"] = s.timings_ms;
    return j;
}

inline RunSummary run_summary_from_json(const nlohmann::json& j) {
    RunSummary s;
    s.tool_version = j.at("tool_version").get<std::string>();
    s.mapping = mapping_stats_from_json(j.at("mapping"));
    if (!j.at("classification").is_null()) {
        s.has_classification = true;
        s.works = detail::category_matrix_from_json(j.at("classification").at("works"));
        s.sources = detail::category_matrix_from_json(j.at("classification").at("sources"));
        s.mixed_rows = j.at("classification").at("mixed_rows").get<std::uint64_t>();
    }
    if (!j.at("provenance").is_null()) {
        s.has_provenance = true;
        s.provenance = detail::provenance_matrix_from_json(j.at("provenance"));
    }
    for (auto it = j.at("config_fingerprints").begin(); it != j.at("config_fingerprints").end();
         ++it)
        s.config_fingerprints[it.key()] = it.value().get<std::string>();
    for (const auto& input : j.at("input_fingerprints"))
        s.input_fingerprints.push_back(FileFingerprint{input.at("path").get<std::string>(),
                                                       input.at("bytes").get<std::uint64_t>(),
                                                       input.at("fnv1a").get<std::string>()});
    for (auto it = j.at("timings_ms").begin(); it != j.at("timings_ms").end(); ++it)
        s.timings_ms[it.key()] = it.value().get<std::uint64_t>();
    return s;
}

/// Deterministic rendering; percentages use one decimal place.
inline std::string render_report(const RunSummary& s, ReportFormat format) {
    if (format == ReportFormat::json) return run_summary_to_json(s).dump(2) + "\n";

    std::ostringstream out;
    const MappingStats& m = s.mapping;
    out << "bibmap run report\n";
    out << "version: " << s.tool_version << "\n\n";
    out << "[mapping]\n";
    out << "processed: " << m.processed << "\n";
    out << "with supported pids: " << m.with_supported_pids << "\n";
    out << "one-to-one: " << m.one_to_one << " (" << percent_1dp(m.one_to_one, m.with_supported_pids)
        << "% of supported)\n";
    out << "multi-mapped: " << m.multi_mapped << " ("
        << percent_1dp(m.multi_mapped, m.with_supported_pids) << "% of supported)\n";
    out << "non-mapped with pids: " << m.non_mapped_with_pids << " ("
        << percent_1dp(m.non_mapped_with_pids, m.with_supported_pids) << "% of supported)\n";
    out << "non-mapped without pids: " << m.non_mapped_without_pids << "\n";
    out << "inverted multi-mapped omids: " << m.inverted_multi_omids << "\n";
    out << "\n[multiplicity]\n";
    for (auto [n, count] : m.multiplicity_histogram)
        out << n << ": " << count << " (" << percent_1dp(count, m.multi_mapped) << "%)\n";
    if (s.has_classification) {
        auto render_matrix = [&](const char* name, const CategoryMatrix& matrix,
                                 const std::vector<Category>& cats) {
            out << "\n[" << name << "]\n";
            for (const auto& type : matrix.row_types()) {
                out << (type.empty() ? "<unspecified>" : type) << ":";
                for (Category c : cats) {
                    auto it = matrix.cells.find({type, c});
                    out << ' ' << category_tag(c) << '='
                        << (it == matrix.cells.end() ? 0 : it->second);
                }
                out << '\n';
            }
            out << "total: " << matrix.total() << '\n';
        };
        render_matrix("works categories", s.works, work_categories());
        render_matrix("sources categories", s.sources, source_categories());
        out << "mixed-kind rows: " << s.mixed_rows << '\n';
    }
    if (s.has_provenance) {
        out << "\n[provenance]\n";
        for (const auto& [key, count] : s.provenance.cells) {
            const auto& [set_key, has_pid, type] = key;
            out << set_key << " | " << (has_pid ? "yes" : "no") << " | "
                << (type.empty() ? "<unspecified>" : type) << ": " << count << '\n';
        }
        out << "joined: " << s.provenance.joined << '\n';
        out << "unknown provenance: " << s.provenance.unknown << '\n';
    }
    if (!s.input_fingerprints.empty()) {
        out << "\n[inputs]\n";
        for (const auto& fp : s.input_fingerprints)
            out << fp.path << " bytes=" << fp.bytes << " fnv1a=" << fp.fnv1a << '\n';
    }
    if (!s.config_fingerprints.empty()) {
        out << "\n[config]\n";
        for (const auto& [name, fp] : s.config_fingerprints) out << name << ": " << fp << '\n';
    }
    return std::move(out).str();
}

/// Emit summary.json, report.txt, and histogram.csv into out_dir.
inline void write_summary_outputs(const RunSummary& summary,
                                  const std::filesystem::path& out_dir) {
    auto write_file = [&](const std::filesystem::path& path, const std::string& bytes) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw_io_failure("cannot create report output", path.string());
        out << bytes;
        if (!out) throw_io_failure("report write failed", path.string());
    };
    write_file(out_dir / "summary.json", render_report(summary, ReportFormat::json));
    write_file(out_dir / "report.txt", render_report(summary, ReportFormat::text));
    std::ostringstream hist;
    {
        CsvWriter csv(hist);
        csv.write_row({"multiplicity", "count", "percentage"});
        for (auto [n, count] : summary.mapping.multiplicity_histogram)
            csv.write_row({std::to_string(n), std::to_string(count),
                           percent_1dp(count, summary.mapping.multi_mapped)});
    }
    write_file(out_dir / "histogram.csv", std::move(hist).str());
}

}  // namespace bibmap
