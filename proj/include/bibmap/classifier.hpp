#pragma once

// Cause classification for multi-mapped rows. Work rows are tested against
// rules A > D > B > E > F > C, first match wins; Source rows only ever
// receive A. Works are scanned in sorted oa_id order so verdicts are a pure
// function of (row, store, config).
//
//   A  two or more targets share an external PID outright
//   D  a version-marked DOI ("/v2", ".v3") marks merged preprint versions
//   B  a preprint-registrant DOI prefix plus a submitted/accepted version
//   E  a preprint hosting indicator inside the DOI value
//   F  all DOIs share one registrant prefix and a companion record
//      (peer-review, editorial, erratum, letter) is among the targets
//   C  all DOIs share one registrant prefix and exactly two targets

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bibmap/csv.hpp"
#include "bibmap/defects.hpp"
#include "bibmap/errors.hpp"
#include "bibmap/index.hpp"
#include "bibmap/ingest.hpp"
#include "bibmap/pid.hpp"

namespace bibmap {

enum class Category { A, B, C, D, E, F, unclassified };

inline std::string_view category_tag(Category c) {
    switch (c) {
        case Category::A: return "A";
        case Category::B: return "B";
        case Category::C: return "C";
        case Category::D: return "D";
        case Category::E: return "E";
        case Category::F: return "F";
        case Category::unclassified: break;
    }
    return "Unclassified";
}

inline std::optional<Category> category_from_tag(std::string_view t) {
    if (t == "A") return Category::A;
    if (t == "B") return Category::B;
    if (t == "C") return Category::C;
    if (t == "D") return Category::D;
    if (t == "E") return Category::E;
    if (t == "F") return Category::F;
    if (t == "Unclassified") return Category::unclassified;
    return std::nullopt;
}

struct CategoryVerdict {
    Category category = Category::unclassified;
    std::string evidence;  // which rule fired, on which PID/work
    bool operator==(const CategoryVerdict&) const = default;
};

enum class RowKind { work, source, mixed };

/// One row of the multi-mapped table.
struct MultiRow {
    std::string omid;
    std::vector<std::string> oa_ids;
    std::string br_type;
};

inline RowKind row_kind(const std::vector<std::string>& oa_ids) {
    bool has_w = false, has_s = false;
    for (const auto& id : oa_ids) {
        if (!id.empty() && id[0] == 'W') has_w = true;
        else has_s = true;
    }
    if (has_w && has_s) return RowKind::mixed;
    return has_w ? RowKind::work : RowKind::source;
}

namespace detail {

inline std::optional<std::string> work_doi(const OaRecord& rec) {
    for (const auto& pid : rec.pids)
        if (pid.scheme == PidScheme::doi) return pid.value;
    return std::nullopt;
}

inline std::optional<CategoryVerdict> shared_pid_rule(const std::vector<OaRecord>& recs,
                                                      bool sources) {
    std::map<std::string, std::vector<std::string>> owners;
    for (const auto& rec : recs) {
        const auto& pids = sources ? rec.issns : rec.pids;
        for (const auto& pid : pids) owners[pid.render()].push_back(rec.oa_id.value);
    }
    for (const auto& [key, ids] : owners) {
        if (ids.size() >= 2)
            return CategoryVerdict{Category::A, "shared " + key + " among " +
                                                    join_ids(ids)};
    }
    return std::nullopt;
}

}  // namespace detail

/// Classify one multi-mapped row. Every oa_id must resolve via the store;
/// mixed rows are refused (the mapper flags them for the defect bucket).
inline CategoryVerdict classify_row(const MultiRow& row, const MetaStore& store,
                                    const ClassifierConfig& cfg) {
    RowKind kind = row_kind(row.oa_ids);
    if (kind == RowKind::mixed)
        throw MixedKindRowError("row " + row.omid + " mixes work and source targets");

    std::vector<std::string> ids = row.oa_ids;
    std::sort(ids.begin(), ids.end());
    std::vector<OaRecord> recs;
    recs.reserve(ids.size());
    for (const auto& id : ids) {
        auto rec = store.try_get(id);
        if (!rec)
            throw MetaMissingError("row " + row.omid + ": no metadata for '" + id + "'");
        recs.push_back(std::move(*rec));
    }

    if (kind == RowKind::source) {
        if (auto v = detail::shared_pid_rule(recs, /*sources=*/true)) return *v;
        return CategoryVerdict{};
    }

    // A: duplicate external PID across the row's works.
    if (auto v = detail::shared_pid_rule(recs, /*sources=*/false)) return *v;

    // D: any version-marked DOI.
    for (const auto& rec : recs) {
        auto doi = detail::work_doi(rec);
        if (doi && has_version_suffix(*doi))
            return CategoryVerdict{Category::D,
                                   "version-marked doi " + *doi + " on " + rec.oa_id.value};
    }

    // B: preprint-registrant prefix plus a submitted or accepted version.
    for (const auto& rec : recs) {
        auto doi = detail::work_doi(rec);
        if (!doi) continue;
        if (rec.version != OaVersion::submitted && rec.version != OaVersion::accepted) continue;
        std::string prefix = doi_prefix(*doi).prefix;
        if (cfg.preprint_prefixes.count(prefix))
            return CategoryVerdict{Category::B, "preprint prefix " + prefix + " with " +
                                                    std::string(oa_version_tag(rec.version)) +
                                                    " version on " + rec.oa_id.value};
    }

    // E: preprint hosting indicator inside a DOI value.
    for (const auto& rec : recs) {
        auto doi = detail::work_doi(rec);
        if (!doi) continue;
        for (const auto& ind : cfg.preprint_indicators) {
            if (!ind.empty() && doi->find(ind) != std::string::npos)
                return CategoryVerdict{Category::E, "indicator '" + ind + "' in doi " + *doi +
                                                        " on " + rec.oa_id.value};
        }
    }

    // F and C both require all DOIs in the row to share one registrant
    // prefix; rows whose works all lack DOIs can only be A.
    std::set<std::string> prefixes;
    std::size_t dois_seen = 0;
    for (const auto& rec : recs) {
        if (auto doi = detail::work_doi(rec)) {
            ++dois_seen;
            prefixes.insert(doi_prefix(*doi).prefix);
        }
    }
    if (dois_seen > 0 && prefixes.size() == 1) {
        const std::string& prefix = *prefixes.begin();
        for (const auto& rec : recs) {
            if (cfg.companion_work_types.count(rec.work_type))
                return CategoryVerdict{Category::F, "companion type '" + rec.work_type + "' on " +
                                                        rec.oa_id.value + " (shared prefix " +
                                                        prefix + ")"};
        }
        if (recs.size() == 2)
            return CategoryVerdict{Category::C, "exactly two works sharing prefix " + prefix};
    }
    return CategoryVerdict{};
}

/// Counts per (br_type, category) cell, aggregated separately for Work rows
/// and Source rows.
struct CategoryMatrix {
    std::map<std::pair<std::string, Category>, std::uint64_t> cells;

    void add(const std::string& br_type, Category cat) { ++cells[{br_type, cat}]; }

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (const auto& [k, v] : cells) t += v;
        return t;
    }

    std::uint64_t category_total(Category cat) const {
        std::uint64_t t = 0;
        for (const auto& [k, v] : cells)
            if (k.second == cat) t += v;
        return t;
    }

    std::vector<std::string> row_types() const {
        std::set<std::string> types;
        for (const auto& [k, v] : cells) types.insert(k.first);
        return {types.begin(), types.end()};
    }

    bool operator==(const CategoryMatrix&) const = default;
};

inline const std::vector<Category>& work_categories() {
    static const std::vector<Category> cats{Category::A, Category::B, Category::C, Category::D,
                                            Category::E, Category::F, Category::unclassified};
    return cats;
}

inline const std::vector<Category>& source_categories() {
    static const std::vector<Category> cats{Category::A, Category::unclassified};
    return cats;
}

inline nlohmann::json category_matrix_to_json(const CategoryMatrix& m,
                                              const std::vector<Category>& cats) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& type : m.row_types()) {
        nlohmann::json row;
        row["type"] = type;
        for (Category c : cats) {
            auto it = m.cells.find({type, c});
            row[std::string(category_tag(c))] = it == m.cells.end() ? 0 : it->second;
        }
        rows.push_back(row);
    }
    nlohmann::json j;
    j["rows"] = rows;
    j["total"] = m.total();
    return j;
}

inline void write_category_matrix_csv(const CategoryMatrix& m, const std::vector<Category>& cats,
                                      const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw_io_failure("cannot create matrix csv", path.string());
    CsvWriter csv(out);
    std::vector<std::string> header{"type"};
    for (Category c : cats) header.emplace_back(category_tag(c));
    csv.write_row(header);
    for (const auto& type : m.row_types()) {
        std::vector<std::string> row{type};
        for (Category c : cats) {
            auto it = m.cells.find({type, c});
            row.push_back(std::to_string(it == m.cells.end() ? 0 : it->second));
        }
        csv.write_row(row);
    }
    std::vector<std::string> totals{"total"};
    for (Category c : cats) totals.push_back(std::to_string(m.category_total(c)));
    csv.write_row(totals);
}

struct ClassifyResult {
    CategoryMatrix works;
    CategoryMatrix sources;
    std::uint64_t rows = 0;
    std::uint64_t work_rows = 0;
    std::uint64_t source_rows = 0;
    std::uint64_t mixed_rows = 0;  // defect bucket, never classified
};

/// Classify every row of multi_mapped.csv, writing verdicts.csv and the two
/// matrices into out_dir. Mixed-kind rows land in the defect bucket.
inline ClassifyResult classify_all(const std::filesystem::path& multi_csv, const MetaStore& store,
                                   const ClassifierConfig& cfg,
                                   const std::filesystem::path& out_dir,
                                   DefectLog* defects = nullptr) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::ifstream in(multi_csv, std::ios::binary);
    if (!in) throw_io_failure("cannot open multi table", multi_csv.string());
    std::ofstream verdicts_f(out_dir / "verdicts.csv", std::ios::binary | std::ios::trunc);
    if (!verdicts_f) throw_io_failure("cannot create verdicts", (out_dir / "verdicts.csv").string());
    CsvWriter verdicts(verdicts_f);
    verdicts.write_row({"omid", "openalex_ids", "kind", "category", "evidence"});

    ClassifyResult result;
    CsvReader csv(in);
    std::vector<std::string> row;
    if (!csv.next_row(row)) throw IoFailureError("multi table has no header: " + multi_csv.string());
    while (csv.next_row(row)) {
        if (row.size() < 3) {
            if (defects) defects->report(multi_csv.string(), csv.line_no(), "short row");
            continue;
        }
        ++result.rows;
        MultiRow mrow;
        mrow.omid = row[0];
        mrow.br_type = row[2];
        mrow.oa_ids = split_ids(row[1]);
        RowKind kind = row_kind(mrow.oa_ids);
        if (kind == RowKind::mixed) {
            ++result.mixed_rows;
            if (defects)
                defects->report(multi_csv.string(), csv.line_no(),
                                "row " + mrow.omid + " mixes work and source targets");
            continue;
        }
        CategoryVerdict verdict = classify_row(mrow, store, cfg);
        if (kind == RowKind::work) {
            ++result.work_rows;
            result.works.add(mrow.br_type, verdict.category);
        } else {
            ++result.source_rows;
            result.sources.add(mrow.br_type, verdict.category);
        }
        verdicts.write_row({mrow.omid, row[1], std::string(oa_kind_tag(kind == RowKind::work
                                                                           ? OaKind::work
                                                                           : OaKind::source)),
                            std::string(category_tag(verdict.category)), verdict.evidence});
    }
    write_category_matrix_csv(result.works, work_categories(), out_dir / "works_matrix.csv");
    write_category_matrix_csv(result.sources, source_categories(),
                              out_dir / "sources_matrix.csv");
    return result;
}

}  // namespace bibmap
