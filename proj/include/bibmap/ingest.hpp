#pragma once

// Streaming ingest of the two dump formats and the classifier configuration
// lists. Readers yield one typed record at a time in input order and stay
// within a constant memory envelope; malformed records become defects, not
// failures.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "bibmap/csv.hpp"
#include "bibmap/defects.hpp"
#include "bibmap/errors.hpp"
#include "bibmap/line_reader.hpp"
#include "bibmap/pid.hpp"
#include "bibmap/util.hpp"

namespace bibmap {

/// One bibliographic resource from the source collection.
struct BrRecord {
    Pid omid;                // scheme omid
    std::vector<Pid> pids;   // external only; never contains the omid scheme
    std::string br_type;     // may be empty
    bool operator==(const BrRecord&) const = default;
};

enum class OaKind { work, source };

inline std::string_view oa_kind_tag(OaKind k) { return k == OaKind::work ? "work" : "source"; }

enum class OaVersion { submitted, accepted, published, unknown };

inline std::string_view oa_version_tag(OaVersion v) {
    switch (v) {
        case OaVersion::submitted: return "submitted";
        case OaVersion::accepted: return "accepted";
        case OaVersion::published: return "published";
        case OaVersion::unknown: break;
    }
    return "unknown";
}

inline OaVersion oa_version_from_tag(std::string_view t) {
    if (t == "submitted") return OaVersion::submitted;
    if (t == "accepted") return OaVersion::accepted;
    if (t == "published") return OaVersion::published;
    return OaVersion::unknown;
}

/// The classifier's Category B needs exactly the submitted/accepted split.
inline OaVersion oa_version_from_snapshot(std::string_view raw) {
    if (raw == "submittedVersion") return OaVersion::submitted;
    if (raw == "acceptedVersion") return OaVersion::accepted;
    if (raw == "publishedVersion") return OaVersion::published;
    return OaVersion::unknown;
}

/// One target-collection entity.
struct OaRecord {
    Pid oa_id;               // scheme openalex; "W…" for works, "S…" for sources
    OaKind kind{};
    std::vector<Pid> pids;   // external PIDs (doi/pmid/pmcid/mag for works)
    std::string work_type;   // empty when absent
    OaVersion version = OaVersion::unknown;
    std::vector<Pid> issns;  // sources only, at most two
    bool operator==(const OaRecord&) const = default;
};

/// Classifier configuration lists (see load_config).
struct ClassifierConfig {
    std::set<std::string> preprint_prefixes;     // DOI registrant prefixes
    std::vector<std::string> preprint_indicators;  // lower-case substrings
    // Work types that mark a Category F companion record. The published
    // heuristic names peer-review/editorial/erratum/letter.
    std::set<std::string> companion_work_types{"peer-review", "editorial", "erratum", "letter"};

    std::string prefixes_fingerprint() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto& p : preprint_prefixes) h = fnv1a64(p + "\n", h);
        return hex64(h);
    }
    std::string indicators_fingerprint() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto& i : preprint_indicators) h = fnv1a64(i + "\n", h);
        return hex64(h);
    }
};

/// Streams BrRecords from the source collection's CSV dump. The "id" column
/// holds space-separated "scheme:value" tokens, one of which must be the
/// omid; the "type" column holds the BR type.
class MetaCsvReader {
public:
    MetaCsvReader(std::istream& in, std::string input_label, DefectLog& defects)
        : csv_(in), label_(std::move(input_label)), defects_(defects) {
        std::vector<std::string> header;
        if (!csv_.next_row(header)) throw MissingColumnError(label_ + ": empty csv, no header");
        for (std::size_t i = 0; i < header.size(); ++i) {
            std::string h = to_lower(trim(header[i]));
            if (h == "id") id_col_ = static_cast<long>(i);
            else if (h == "type") type_col_ = static_cast<long>(i);
        }
        if (id_col_ < 0) throw MissingColumnError(label_ + ": no 'id' column in header");
        if (type_col_ < 0) throw MissingColumnError(label_ + ": no 'type' column in header");
    }

    std::optional<BrRecord> next() {
        std::vector<std::string> row;
        while (csv_.next_row(row)) {
            ++rows_in_;
            auto rec = parse_row(row);
            if (rec) {
                ++rows_yielded_;
                return rec;
            }
            ++rows_skipped_;
        }
        return std::nullopt;
    }

    std::uint64_t rows_in() const { return rows_in_; }
    std::uint64_t rows_yielded() const { return rows_yielded_; }
    std::uint64_t rows_skipped() const { return rows_skipped_; }
    std::uint64_t token_defects() const { return token_defects_; }

private:
    std::optional<BrRecord> parse_row(const std::vector<std::string>& row) {
        std::size_t line = csv_.line_no();
        if (static_cast<std::size_t>(std::max(id_col_, type_col_)) >= row.size()) {
            defects_.report(label_, line, "row has fewer columns than header");
            return std::nullopt;
        }
        BrRecord rec;
        rec.br_type = trim(row[static_cast<std::size_t>(type_col_)]);
        bool have_omid = false;
        std::istringstream tokens(row[static_cast<std::size_t>(id_col_)]);
        std::string token;
        while (tokens >> token) {
            std::string reason;
            auto pid = try_parse_pid(token, &reason);
            if (!pid) {
                ++token_defects_;
                defects_.report(label_, line, "bad pid token '" + token + "': " + reason);
                continue;
            }
            if (pid->scheme == PidScheme::omid) {
                if (have_omid) {
                    ++token_defects_;
                    defects_.report(label_, line, "extra omid token '" + token + "' ignored");
                    continue;
                }
                have_omid = true;
                rec.omid = std::move(*pid);
            } else {
                rec.pids.push_back(std::move(*pid));
            }
        }
        if (!have_omid) {
            defects_.report(label_, line, "row lacks an omid token");
            return std::nullopt;
        }
        // Duplicate omids are dump defects. Tracked via 64-bit hashes to keep
        // the footprint small at dump scale.
        if (!seen_omids_.insert(fnv1a64(rec.omid.value)).second) {
            defects_.report(label_, line, "duplicate omid '" + rec.omid.value + "'");
            return std::nullopt;
        }
        return rec;
    }

    CsvReader csv_;
    std::string label_;
    DefectLog& defects_;
    long id_col_ = -1;
    long type_col_ = -1;
    std::uint64_t rows_in_ = 0, rows_yielded_ = 0, rows_skipped_ = 0, token_defects_ = 0;
    std::unordered_set<std::uint64_t> seen_omids_;
};

/// Field names accepted from the JSON-Lines side. Snapshot schemas drift
/// across releases, so the traversal is a data-driven adapter rather than
/// hard-coded paths.
struct JsonAdapter {
    std::string id_field = "id";
    std::string ids_field = "ids";
    std::string type_field = "type";
    std::string issn_field = "issn";
    // First present path wins; each path is object keys from the root.
    std::vector<std::vector<std::string>> version_paths{{"primary_location", "version"},
                                                        {"best_oa_location", "version"}};
    std::vector<std::pair<std::string, PidScheme>> work_id_schemes{
        {"doi", PidScheme::doi},
        {"pmid", PidScheme::pmid},
        {"pmcid", PidScheme::pmcid},
        {"mag", PidScheme::mag}};
    std::vector<std::pair<std::string, PidScheme>> source_id_schemes{
        {"wikidata", PidScheme::wikidata},
        {"mag", PidScheme::mag},
        {"fatcat", PidScheme::fatcat}};
};

inline const JsonAdapter& default_json_adapter() {
    static const JsonAdapter adapter;
    return adapter;
}

/// Streams OaRecords from a JSON-Lines snapshot (optionally gzipped). Lines
/// that fail to parse, or records of the wrong kind, are counted and skipped.
class OpenAlexReader {
public:
    OpenAlexReader(std::istream& in, OaKind kind, std::string input_label, DefectLog& defects,
                   const JsonAdapter& adapter = default_json_adapter())
        : lines_(in), kind_(kind), label_(std::move(input_label)), defects_(defects),
          adapter_(adapter) {}

    std::optional<OaRecord> next() {
        std::string line;
        while (lines_.next(line)) {
            ++lines_in_;
            if (trim_view(line).empty()) {
                ++lines_skipped_;
                defects_.report(label_, lines_.line_no(), "blank line");
                continue;
            }
            auto rec = parse_line(line);
            if (rec) {
                ++lines_yielded_;
                return rec;
            }
            ++lines_skipped_;
        }
        return std::nullopt;
    }

    std::uint64_t lines_in() const { return lines_in_; }
    std::uint64_t lines_yielded() const { return lines_yielded_; }
    std::uint64_t lines_skipped() const { return lines_skipped_; }

private:
    std::optional<OaRecord> parse_line(const std::string& line) {
        std::size_t line_no = lines_.line_no();
        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            defects_.report(label_, line_no, "unparseable json line");
            return std::nullopt;
        }
        auto id_it = doc.find(adapter_.id_field);
        if (id_it == doc.end() || !id_it->is_string()) {
            defects_.report(label_, line_no, "missing id field");
            return std::nullopt;
        }
        std::string reason;
        auto id_value = try_normalize_value(PidScheme::openalex, id_it->get<std::string>(), &reason);
        if (!id_value) {
            defects_.report(label_, line_no, "bad openalex id: " + reason);
            return std::nullopt;
        }
        OaKind kind = (*id_value)[0] == 'W' ? OaKind::work : OaKind::source;
        if (kind != kind_) {
            defects_.report(label_, line_no,
                            "expected " + std::string(oa_kind_tag(kind_)) + " id, got '" +
                                *id_value + "'");
            return std::nullopt;
        }
        OaRecord rec;
        rec.oa_id = Pid{PidScheme::openalex, std::move(*id_value)};
        rec.kind = kind;
        if (kind == OaKind::work) parse_work(doc, line_no, rec);
        else parse_source(doc, line_no, rec);
        return rec;
    }

    void parse_work(const nlohmann::json& doc, std::size_t line_no, OaRecord& rec) {
        if (auto it = doc.find(adapter_.type_field); it != doc.end() && it->is_string())
            rec.work_type = it->get<std::string>();
        rec.version = extract_version(doc);
        if (auto ids = doc.find(adapter_.ids_field); ids != doc.end() && ids->is_object()) {
            for (const auto& [field, scheme] : adapter_.work_id_schemes) {
                auto v = ids->find(field);
                if (v == ids->end()) continue;
                add_pid(rec.pids, scheme, *v, line_no);
            }
        }
    }

    void parse_source(const nlohmann::json& doc, std::size_t line_no, OaRecord& rec) {
        if (auto issns = doc.find(adapter_.issn_field); issns != doc.end() && issns->is_array()) {
            for (const auto& v : *issns) {
                if (rec.issns.size() == 2) {
                    defects_.report(label_, line_no, "source lists more than two issns; extra dropped");
                    break;
                }
                add_pid(rec.issns, PidScheme::issn, v, line_no);
            }
        }
        if (auto ids = doc.find(adapter_.ids_field); ids != doc.end() && ids->is_object()) {
            for (const auto& [field, scheme] : adapter_.source_id_schemes) {
                auto v = ids->find(field);
                if (v == ids->end()) continue;
                add_pid(rec.pids, scheme, *v, line_no);
            }
        }
    }

    void add_pid(std::vector<Pid>& out, PidScheme scheme, const nlohmann::json& raw,
                 std::size_t line_no) {
        std::string text;
        if (raw.is_string()) text = raw.get<std::string>();
        else if (raw.is_number_integer()) text = std::to_string(raw.get<long long>());
        else if (raw.is_null()) return;
        else {
            defects_.report(label_, line_no,
                            std::string(scheme_tag(scheme)) + " id has unexpected json type");
            return;
        }
        std::string reason;
        auto value = try_normalize_value(scheme, text, &reason);
        if (!value) {
            defects_.report(label_, line_no,
                            "bad " + std::string(scheme_tag(scheme)) + " '" + text + "': " + reason);
            return;
        }
        Pid pid{scheme, std::move(*value)};
        if (std::find(out.begin(), out.end(), pid) == out.end()) out.push_back(std::move(pid));
    }

    OaVersion extract_version(const nlohmann::json& doc) const {
        for (const auto& path : adapter_.version_paths) {
            const nlohmann::json* node = &doc;
            bool ok = true;
            for (const auto& key : path) {
                auto it = node->find(key);
                if (it == node->end() || it->is_null()) {
                    ok = false;
                    break;
                }
                node = &*it;
            }
            if (ok && node->is_string())
                return oa_version_from_snapshot(node->get<std::string>());
        }
        return OaVersion::unknown;
    }

    LineReader lines_;
    OaKind kind_;
    std::string label_;
    DefectLog& defects_;
    const JsonAdapter& adapter_;
    std::uint64_t lines_in_ = 0, lines_yielded_ = 0, lines_skipped_ = 0;
};

namespace detail {

template <typename PerEntry>
inline void read_config_list(const std::filesystem::path& path, PerEntry&& per_entry) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io_failure("cannot open config list", path.string());
    LineReader lines(in);
    std::string line;
    while (lines.next(line)) {
        std::string entry = trim(line);
        auto hash = entry.find('#');
        if (hash != std::string::npos) entry = trim(entry.substr(0, hash));
        if (entry.empty()) continue;
        per_entry(to_lower(entry), lines.line_no());
    }
}

}  // namespace detail

/// Load the preprint DOI-prefix and indicator lists: plain text, one entry
/// per line, '#' comments allowed. Entries are lower-cased and deduplicated;
/// prefixes must be "10."-rooted.
inline ClassifierConfig load_config(const std::filesystem::path& prefix_path,
                                    const std::filesystem::path& indicator_path) {
    ClassifierConfig cfg;
    detail::read_config_list(prefix_path, [&](std::string entry, std::size_t line_no) {
        if (entry.rfind("10.", 0) != 0 || entry.size() <= 3 ||
            entry.find('/') != std::string::npos)
            throw MalformedEntryError(prefix_path.string() + ": '" + entry +
                                          "' is not a doi registrant prefix",
                                      line_no);
        cfg.preprint_prefixes.insert(std::move(entry));
    });
    detail::read_config_list(indicator_path, [&](std::string entry, std::size_t line_no) {
        (void)line_no;
        if (std::find(cfg.preprint_indicators.begin(), cfg.preprint_indicators.end(), entry) ==
            cfg.preprint_indicators.end())
            cfg.preprint_indicators.push_back(std::move(entry));
    });
    return cfg;
}

/// JSON form used by the metadata side-store.
inline nlohmann::json oa_record_to_json(const OaRecord& rec) {
    nlohmann::json j;
    j["id"] = rec.oa_id.value;
    j["kind"] = std::string(oa_kind_tag(rec.kind));
    j["type"] = rec.work_type;
    j["version"] = std::string(oa_version_tag(rec.version));
    auto render_all = [](const std::vector<Pid>& pids) {
        std::vector<std::string> out;
        out.reserve(pids.size());
        for (const auto& p : pids) out.push_back(p.render());
        return out;
    };
    j["pids"] = render_all(rec.pids);
    j["issns"] = render_all(rec.issns);
    return j;
}

inline OaRecord oa_record_from_json(const nlohmann::json& j) {
    OaRecord rec;
    rec.oa_id = Pid{PidScheme::openalex, j.at("id").get<std::string>()};
    rec.kind = j.at("kind").get<std::string>() == "work" ? OaKind::work : OaKind::source;
    rec.work_type = j.at("type").get<std::string>();
    rec.version = oa_version_from_tag(j.at("version").get<std::string>());
    for (const auto& t : j.at("pids")) rec.pids.push_back(parse_pid(t.get<std::string>()));
    for (const auto& t : j.at("issns")) rec.issns.push_back(parse_pid(t.get<std::string>()));
    return rec;
}

}  // namespace bibmap
