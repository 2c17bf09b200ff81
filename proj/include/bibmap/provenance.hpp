#pragma once

// Provenance attribution for non-mapped BRs: each entity is credited to the
// set of primary sources its metadata snapshots were derived from, and the
// aggregate joins those sets against the non-mapped table to produce the
// source-set x has-PID x type count matrix. The join externally sorts both
// sides by omid, so memory stays constant at dump scale.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "bibmap/csv.hpp"
#include "bibmap/defects.hpp"
#include "bibmap/errors.hpp"
#include "bibmap/extsort.hpp"
#include "bibmap/line_reader.hpp"
#include "bibmap/pid.hpp"
#include "bibmap/util.hpp"

namespace bibmap {

/// Primary sources of one entity, merged across all of its snapshots.
struct ProvenanceRecord {
    std::string omid;                 // omid value, e.g. "br/061"
    std::set<std::string> sources;    // canonical labels, non-empty
    bool operator==(const ProvenanceRecord&) const = default;
};

namespace detail {

struct SourcePattern {
    const char* needle;
    const char* label;
};

// Matched by registered substring, first hit wins.
inline constexpr SourcePattern kSourceTable[] = {
    {"crossref", "Crossref"}, {"datacite", "DataCite"},       {"nih.gov", "NIH"},
    {"icite", "NIH"},         {"openaire", "OpenAIRE"},       {"japanlinkcenter", "JaLC"},
    {"jalc", "JaLC"},         {"zenodo", "Zenodo"},
};

}  // namespace detail

inline std::optional<std::string> try_source_label(std::string_view url) {
    std::string lower = to_lower(url);
    for (const auto& entry : detail::kSourceTable)
        if (lower.find(entry.needle) != std::string::npos) return std::string(entry.label);
    return std::nullopt;
}

/// Canonical label for a primary-source URL.
inline std::string source_label(std::string_view url) {
    auto label = try_source_label(url);
    if (!label) throw UnknownSourceUrlError("no source label for url '" + std::string(url) + "'");
    return *label;
}

/// Field names accepted from provenance JSON-Lines; the traversal is shallow
/// on purpose so fixture files stay trivial to write.
struct ProvenanceAdapter {
    std::string omid_field = "omid";
    std::string sources_field = "sources";      // ["url", ...]
    std::string snapshots_field = "snapshots";  // [{"source": "url"}, ...]
    std::string snapshot_source_field = "source";
};

inline const ProvenanceAdapter& default_provenance_adapter() {
    static const ProvenanceAdapter adapter;
    return adapter;
}

/// Streams ProvenanceRecords from either JSON-Lines (one entity per line)
/// or the simplified two-column CSV form "omid,source_url" used by fixtures
/// (adjacent rows for one omid are merged). Entities whose sources are all
/// unknown contribute nothing and are reported as defects.
class ProvenanceReader {
public:
    ProvenanceReader(std::istream& in, std::string input_label, DefectLog& defects,
                     const ProvenanceAdapter& adapter = default_provenance_adapter())
        : in_(in), label_(std::move(input_label)), defects_(defects), adapter_(adapter) {
        int c = in_.peek();
        json_mode_ = c == '{';
        if (json_mode_) lines_.emplace(in_);
        else csv_.emplace(in_);
    }

    std::optional<ProvenanceRecord> next() {
        return json_mode_ ? next_json() : next_csv();
    }

private:
    std::optional<ProvenanceRecord> next_json() {
        std::string line;
        while (lines_->next(line)) {
            if (trim_view(line).empty()) continue;
            nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
            if (doc.is_discarded() || !doc.is_object()) {
                defects_.report(label_, lines_->line_no(), "unparseable provenance line");
                continue;
            }
            auto omid_it = doc.find(adapter_.omid_field);
            if (omid_it == doc.end() || !omid_it->is_string()) {
                defects_.report(label_, lines_->line_no(), "missing omid field");
                continue;
            }
            std::string reason;
            auto omid = try_normalize_value(PidScheme::omid, omid_it->get<std::string>(), &reason);
            if (!omid) {
                defects_.report(label_, lines_->line_no(), "bad omid: " + reason);
                continue;
            }
            ProvenanceRecord rec;
            rec.omid = std::move(*omid);
            auto add_url = [&](const std::string& url) {
                auto lbl = try_source_label(url);
                if (lbl) rec.sources.insert(std::move(*lbl));
                else defects_.report(label_, lines_->line_no(), "unknown source url '" + url + "'");
            };
            if (auto it = doc.find(adapter_.sources_field); it != doc.end() && it->is_array())
                for (const auto& v : *it)
                    if (v.is_string()) add_url(v.get<std::string>());
            if (auto it = doc.find(adapter_.snapshots_field); it != doc.end() && it->is_array())
                for (const auto& snap : *it)
                    if (snap.is_object()) {
                        auto s = snap.find(adapter_.snapshot_source_field);
                        if (s != snap.end() && s->is_string()) add_url(s->get<std::string>());
                    }
            if (rec.sources.empty()) {
                defects_.report(label_, lines_->line_no(),
                                "entity " + rec.omid + " has no known primary source");
                continue;
            }
            return rec;
        }
        return std::nullopt;
    }

    std::optional<ProvenanceRecord> next_csv() {
        std::vector<std::string> row;
        while (pending_ || csv_reader().next_row(row)) {
            if (pending_) {
                row = std::move(*pending_);
                pending_.reset();
            }
            if (row.size() < 2) {
                if (!row.empty() && !(row.size() == 1 && row[0].empty()))
                    defects_.report(label_, csv_reader().line_no(), "short provenance row");
                continue;
            }
            if (to_lower(trim(row[0])) == "omid") continue;  // optional header
            std::string reason;
            auto omid = try_normalize_value(PidScheme::omid, row[0], &reason);
            if (!omid) {
                defects_.report(label_, csv_reader().line_no(), "bad omid: " + reason);
                continue;
            }
            ProvenanceRecord rec;
            rec.omid = std::move(*omid);
            add_csv_source(rec, row[1]);
            // Merge adjacent rows for the same entity.
            while (csv_reader().next_row(row)) {
                if (row.size() >= 2) {
                    auto next_omid = try_normalize_value(PidScheme::omid, row[0], nullptr);
                    if (next_omid && *next_omid == rec.omid) {
                        add_csv_source(rec, row[1]);
                        continue;
                    }
                }
                pending_ = std::move(row);
                break;
            }
            if (rec.sources.empty()) {
                defects_.report(label_, csv_reader().line_no(),
                                "entity " + rec.omid + " has no known primary source");
                continue;
            }
            return rec;
        }
        return std::nullopt;
    }

    void add_csv_source(ProvenanceRecord& rec, const std::string& url) {
        auto lbl = try_source_label(url);
        if (lbl) rec.sources.insert(std::move(*lbl));
        else defects_.report(label_, csv_reader().line_no(), "unknown source url '" + url + "'");
    }

    CsvReader& csv_reader() { return *csv_; }

    std::istream& in_;
    std::string label_;
    DefectLog& defects_;
    const ProvenanceAdapter& adapter_;
    bool json_mode_ = false;
    std::optional<LineReader> lines_;
    std::optional<CsvReader> csv_;
    std::optional<std::vector<std::string>> pending_;
};

/// Counts keyed by (source set, has external PID, br type). Sets are
/// canonical sorted label tuples rendered "A+B", so {Crossref, Zenodo} and
/// {Zenodo, Crossref} are one cell.
struct ProvenanceMatrix {
    std::map<std::tuple<std::string, bool, std::string>, std::uint64_t> cells;
    std::uint64_t joined = 0;   // non-mapped BRs with provenance found
    std::uint64_t unknown = 0;  // non-mapped BRs with no provenance record

    void add(const std::set<std::string>& sources, bool has_pid, const std::string& br_type) {
        std::string key;
        for (const auto& s : sources) {
            if (!key.empty()) key += '+';
            key += s;
        }
        ++cells[{key, has_pid, br_type}];
        ++joined;
    }

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (const auto& [k, v] : cells) t += v;
        return t;
    }

    bool operator==(const ProvenanceMatrix&) const = default;
};

inline nlohmann::json provenance_matrix_to_json(const ProvenanceMatrix& m) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& [key, count] : m.cells) {
        nlohmann::json cell;
        cell["source_set"] = std::get<0>(key);
        cell["has_pid"] = std::get<1>(key);
        cell["type"] = std::get<2>(key);
        cell["count"] = count;
        cells.push_back(cell);
    }
    nlohmann::json j;
    j["cells"] = cells;
    j["joined"] = m.joined;
    j["unknown"] = m.unknown;
    return j;
}

/// provenance_matrix.csv layout: source_set, has_pid, then one column per
/// br_type observed (sorted), one row per (source_set, has_pid).
inline void write_provenance_matrix_csv(const ProvenanceMatrix& m,
                                        const std::filesystem::path& path) {
    std::set<std::string> types;
    std::set<std::pair<std::string, bool>> row_keys;
    for (const auto& [key, count] : m.cells) {
        types.insert(std::get<2>(key));
        row_keys.insert({std::get<0>(key), std::get<1>(key)});
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw_io_failure("cannot create provenance matrix", path.string());
    CsvWriter csv(out);
    std::vector<std::string> header{"source_set", "has_pid"};
    for (const auto& t : types) header.push_back(t.empty() ? "<unspecified>" : t);
    csv.write_row(header);
    for (const auto& [set_key, has_pid] : row_keys) {
        std::vector<std::string> row{set_key, has_pid ? "yes" : "no"};
        for (const auto& t : types) {
            auto it = m.cells.find({set_key, has_pid, t});
            row.push_back(std::to_string(it == m.cells.end() ? 0 : it->second));
        }
        csv.write_row(row);
    }
}

/// Join the non-mapped table with a provenance record stream. Both sides are
/// externally sorted by omid and merged; non-mapped BRs lacking provenance
/// land in the unknown bucket. has-PID comes from the table's had_any_pid
/// column (any external PID at all, ISBN included).
template <typename ProvSource>
ProvenanceMatrix aggregate(const std::filesystem::path& non_mapped_csv, ProvSource& prov,
                           const std::filesystem::path& tmp_dir,
                           std::size_t memory_budget_bytes = 64ull << 20) {
    ExternalLineSorter prov_pairs(tmp_dir, memory_budget_bytes / 2);
    while (auto rec = prov.next())
        for (const auto& label : rec->sources) prov_pairs.add(rec->omid + '\t' + label);

    ExternalLineSorter rows(tmp_dir, memory_budget_bytes / 2);
    {
        std::ifstream in(non_mapped_csv, std::ios::binary);
        if (!in) throw_io_failure("cannot open non-mapped table", non_mapped_csv.string());
        CsvReader csv(in);
        std::vector<std::string> row;
        if (!csv.next_row(row))
            throw IoFailureError("non-mapped table has no header: " + non_mapped_csv.string());
        long omid_col = -1, type_col = -1, any_col = -1;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (row[i] == "omid") omid_col = static_cast<long>(i);
            else if (row[i] == "type") type_col = static_cast<long>(i);
            else if (row[i] == "had_any_pid") any_col = static_cast<long>(i);
        }
        if (omid_col < 0 || type_col < 0 || any_col < 0)
            throw MissingColumnError(non_mapped_csv.string() +
                                     ": need omid, type, had_any_pid columns");
        while (csv.next_row(row)) {
            if (row.size() <= static_cast<std::size_t>(std::max({omid_col, type_col, any_col})))
                continue;
            // Tab separates join key from payload; br_type may hold spaces.
            rows.add(row[static_cast<std::size_t>(omid_col)] + '\t' +
                     row[static_cast<std::size_t>(any_col)] + '\t' +
                     row[static_cast<std::size_t>(type_col)]);
        }
    }

    ProvenanceMatrix matrix;
    auto prov_it = prov_pairs.finish();
    std::string prov_line;
    bool prov_valid = prov_it.next(prov_line);
    auto prov_omid = [&] { return std::string_view(prov_line).substr(0, prov_line.find('\t')); };

    auto rows_it = rows.finish();
    std::string row_line;
    while (rows_it.next(row_line)) {
        auto tab1 = row_line.find('\t');
        auto tab2 = row_line.find('\t', tab1 + 1);
        std::string omid = row_line.substr(0, tab1);
        bool has_pid = row_line.compare(tab1 + 1, tab2 - tab1 - 1, "true") == 0;
        std::string br_type = row_line.substr(tab2 + 1);
        while (prov_valid && prov_omid() < omid) prov_valid = prov_it.next(prov_line);
        std::set<std::string> sources;
        while (prov_valid && prov_omid() == omid) {
            sources.insert(prov_line.substr(prov_line.find('\t') + 1));
            prov_valid = prov_it.next(prov_line);
        }
        if (sources.empty()) ++matrix.unknown;
        else matrix.add(sources, has_pid, br_type);
    }
    prov_pairs.cleanup();
    rows.cleanup();
    return matrix;
}

/// Adapter so an in-memory record vector can drive aggregate().
class ProvenanceVectorSource {
public:
    explicit ProvenanceVectorSource(std::vector<ProvenanceRecord> records)
        : records_(std::move(records)) {}

    std::optional<ProvenanceRecord> next() {
        if (pos_ >= records_.size()) return std::nullopt;
        return records_[pos_++];
    }

private:
    std::vector<ProvenanceRecord> records_;
    std::size_t pos_ = 0;
};

}  // namespace bibmap
