#pragma once

// DOI registrant resolution for spot-check audits of multi-mapped rows.
// The resolver is an interface so audits run offline against a fixture file;
// nothing in the pipeline requires network access.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "bibmap/csv.hpp"
#include "bibmap/errors.hpp"
#include "bibmap/index.hpp"
#include "bibmap/pid.hpp"
#include "bibmap/util.hpp"

namespace bibmap {

struct ResolvedDoi {
    std::string doi;
    std::string agency;  // registrant / registration agency
    std::string title;
};

class DoiResolver {
public:
    virtual ~DoiResolver() = default;
    virtual bool available() const { return true; }
    /// nullopt means the DOI did not resolve (e.g. a 404), not a failure.
    virtual std::optional<ResolvedDoi> resolve(const std::string& doi) = 0;
};

/// Offline resolver backed by a JSON-Lines fixture file with objects
/// {"doi": ..., "agency": ..., "title": ...}.
class FixtureResolver : public DoiResolver {
public:
    explicit FixtureResolver(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw_io_failure("cannot open resolver fixture", path.string());
        std::string line;
        while (std::getline(in, line)) {
            if (trim_view(line).empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object() || !j.contains("doi")) continue;
            ResolvedDoi r;
            r.doi = to_lower(j.at("doi").get<std::string>());
            r.agency = j.value("agency", "");
            r.title = j.value("title", "");
            entries_[r.doi] = std::move(r);
        }
    }

    std::optional<ResolvedDoi> resolve(const std::string& doi) override {
        auto it = entries_.find(to_lower(doi));
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::map<std::string, ResolvedDoi> entries_;
};

/// Stand-in when no resolver was injected; audits degrade, never fail.
class UnavailableResolver : public DoiResolver {
public:
    bool available() const override { return false; }
    std::optional<ResolvedDoi> resolve(const std::string&) override {
        throw ResolverUnavailableError("no resolver injected");
    }
};

struct AuditResult {
    std::uint64_t rows_sampled = 0;
    std::uint64_t dois_resolved = 0;
    std::uint64_t dois_unresolved = 0;
    bool complete = true;  // false when the resolver was unavailable
};

/// Sample `n` rows from verdicts.csv (seeded, reproducible), resolve each
/// work's DOI, and write a side-by-side audit table for human review.
/// Pipeline outputs are never modified.
inline AuditResult run_verify_sample(const std::filesystem::path& verdicts_csv,
                                     const MetaStore& store, DoiResolver& resolver,
                                     std::size_t n, std::uint64_t seed,
                                     const std::filesystem::path& audit_out) {
    std::vector<std::vector<std::string>> rows;
    {
        std::ifstream in(verdicts_csv, std::ios::binary);
        if (!in) throw_io_failure("cannot open verdicts", verdicts_csv.string());
        CsvReader csv(in);
        std::vector<std::string> row;
        if (!csv.next_row(row)) throw IoFailureError("verdicts.csv has no header");
        while (csv.next_row(row))
            if (row.size() >= 4) rows.push_back(row);
    }
    std::vector<std::size_t> picks(rows.size());
    for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
    if (n < picks.size()) {
        std::mt19937_64 rng(seed);
        std::shuffle(picks.begin(), picks.end(), rng);
        picks.resize(n);
        std::sort(picks.begin(), picks.end());
    }

    std::ofstream out(audit_out, std::ios::binary | std::ios::trunc);
    if (!out) throw_io_failure("cannot create audit file", audit_out.string());
    CsvWriter audit(out);
    audit.write_row({"omid", "category", "openalex_id", "doi", "status", "agency", "title"});

    AuditResult result;
    for (std::size_t pick : picks) {
        const auto& row = rows[pick];
        ++result.rows_sampled;
        for (const auto& oa_id : split_ids(row[1])) {
            auto rec = store.try_get(oa_id);
            std::string doi;
            if (rec)
                for (const auto& pid : rec->pids)
                    if (pid.scheme == PidScheme::doi) doi = pid.value;
            if (doi.empty()) {
                audit.write_row({row[0], row[3], oa_id, "", "no-doi", "", ""});
                continue;
            }
            if (!resolver.available()) {
                result.complete = false;
                ++result.dois_unresolved;
                audit.write_row({row[0], row[3], oa_id, doi, "resolver-unavailable", "", ""});
                continue;
            }
            auto resolved = resolver.resolve(doi);
            if (resolved) {
                ++result.dois_resolved;
                audit.write_row({row[0], row[3], oa_id, doi, "resolved", resolved->agency,
                                 resolved->title});
            } else {
                ++result.dois_unresolved;
                audit.write_row({row[0], row[3], oa_id, doi, "unresolved", "", ""});
            }
        }
    }
    return result;
}

}  // namespace bibmap
