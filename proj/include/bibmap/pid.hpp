#pragma once

// Persistent identifier schemes, normalization, and the DOI-structure
// predicates used by the multi-mapping classifier. All functions here are
// pure; any number of workers may call them concurrently.

#include <array>
#include <compare>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "bibmap/errors.hpp"
#include "bibmap/util.hpp"

namespace bibmap {

enum class PidScheme {
    doi,
    pmid,
    pmcid,
    issn,
    isbn,
    omid,
    openalex,
    mag,
    wikidata,
    fatcat,
};

inline constexpr std::array<std::pair<PidScheme, std::string_view>, 10> kSchemeTags{{
    {PidScheme::doi, "doi"},
    {PidScheme::pmid, "pmid"},
    {PidScheme::pmcid, "pmcid"},
    {PidScheme::issn, "issn"},
    {PidScheme::isbn, "isbn"},
    {PidScheme::omid, "omid"},
    {PidScheme::openalex, "openalex"},
    {PidScheme::mag, "mag"},
    {PidScheme::wikidata, "wikidata"},
    {PidScheme::fatcat, "fatcat"},
}};

inline std::string_view scheme_tag(PidScheme s) {
    for (auto [scheme, tag] : kSchemeTags)
        if (scheme == s) return tag;
    return "?";
}

inline std::optional<PidScheme> scheme_from_tag(std::string_view tag) {
    for (auto [scheme, t] : kSchemeTags)
        if (t == tag) return scheme;
    return std::nullopt;
}

/// Work-kind entities are joined on DOI/PMID/PMCID only.
inline constexpr bool is_work_mapping_scheme(PidScheme s) {
    return s == PidScheme::doi || s == PidScheme::pmid || s == PidScheme::pmcid;
}

/// Source-kind entities are joined on ISSN only. ISBN is never eligible.
inline constexpr bool is_mapping_eligible(PidScheme s) {
    return is_work_mapping_scheme(s) || s == PidScheme::issn;
}

/// One normalized (scheme, value) persistent identifier.
struct Pid {
    PidScheme scheme{};
    std::string value;

    auto operator<=>(const Pid&) const = default;

    /// Canonical "scheme:value" rendering; also the index key form.
    std::string render() const {
        std::string out(scheme_tag(scheme));
        out += ':';
        out += value;
        return out;
    }
};

/// Registrant prefix and suffix of a DOI; prefix + "/" + suffix == the DOI.
struct DoiStructure {
    std::string prefix;
    std::string suffix;
    bool operator==(const DoiStructure&) const = default;
};

namespace detail {

inline bool strip_prefix_ci(std::string& v, std::string_view prefix) {
    if (starts_with_ci(v, prefix)) {
        v.erase(0, prefix.size());
        return true;
    }
    return false;
}

/// ISSN check digit over the first seven digits (weights 8..2, mod 11).
inline char issn_check_digit(std::string_view seven) {
    int sum = 0;
    for (int i = 0; i < 7; ++i) sum += (seven[static_cast<std::size_t>(i)] - '0') * (8 - i);
    int check = (11 - sum % 11) % 11;
    return check == 10 ? 'X' : static_cast<char>('0' + check);
}

inline std::optional<std::string> normalize_doi(std::string v, std::string* reason) {
    strip_prefix_ci(v, "https://doi.org/") || strip_prefix_ci(v, "http://doi.org/") ||
        strip_prefix_ci(v, "https://dx.doi.org/") || strip_prefix_ci(v, "http://dx.doi.org/");
    v = to_lower(v);
    auto slash = v.find('/');
    if (v.rfind("10.", 0) != 0 || slash == std::string::npos || slash + 1 == v.size() ||
        slash < 4) {
        if (reason) *reason = "doi must be 10.<registrant>/<suffix>";
        return std::nullopt;
    }
    return v;
}

inline std::optional<std::string> normalize_issn(std::string v, std::string* reason) {
    // Tolerate 8 bare characters by inserting the hyphen before validation.
    if (v.size() == 8 && v.find('-') == std::string::npos) v.insert(4, 1, '-');
    if (v.size() == 9 && v[4] == '-' && v.back() == 'x') v.back() = 'X';
    bool shape_ok = v.size() == 9 && v[4] == '-';
    for (std::size_t i = 0; shape_ok && i < v.size(); ++i) {
        if (i == 4) continue;
        char c = v[i];
        bool is_check_pos = i == 8;
        if (!(c >= '0' && c <= '9') && !(is_check_pos && c == 'X')) shape_ok = false;
    }
    if (!shape_ok) {
        if (reason) *reason = "issn must match DDDD-DDDC";
        return std::nullopt;
    }
    std::string seven = v.substr(0, 4) + v.substr(5, 3);
    if (issn_check_digit(seven) != v.back()) {
        if (reason) *reason = "issn check digit mismatch";
        return std::nullopt;
    }
    return v;
}

inline std::optional<std::string> normalize_pmid(std::string v, std::string* reason) {
    strip_prefix_ci(v, "https://pubmed.ncbi.nlm.nih.gov/") ||
        strip_prefix_ci(v, "http://pubmed.ncbi.nlm.nih.gov/");
    while (!v.empty() && v.back() == '/') v.pop_back();
    while (v.size() > 1 && v.front() == '0') v.erase(0, 1);
    if (!all_digits(v) || v == "0") {
        if (reason) *reason = "pmid must be a positive decimal number";
        return std::nullopt;
    }
    return v;
}

inline std::optional<std::string> normalize_pmcid(std::string v, std::string* reason) {
    strip_prefix_ci(v, "https://www.ncbi.nlm.nih.gov/pmc/articles/") ||
        strip_prefix_ci(v, "http://www.ncbi.nlm.nih.gov/pmc/articles/");
    while (!v.empty() && v.back() == '/') v.pop_back();
    if (starts_with_ci(v, "PMC")) v.replace(0, 3, "PMC");
    if (v.rfind("PMC", 0) != 0 || !all_digits(std::string_view(v).substr(3))) {
        if (reason) *reason = "pmcid must be PMC followed by digits";
        return std::nullopt;
    }
    return v;
}

inline std::optional<std::string> normalize_openalex(std::string v, std::string* reason) {
    strip_prefix_ci(v, "https://openalex.org/") || strip_prefix_ci(v, "http://openalex.org/");
    if (!v.empty() && (v[0] == 'w' || v[0] == 's')) v[0] = static_cast<char>(v[0] - 'a' + 'A');
    if (v.size() < 2 || (v[0] != 'W' && v[0] != 'S') ||
        !all_digits(std::string_view(v).substr(1))) {
        if (reason) *reason = "openalex id must be W or S followed by digits";
        return std::nullopt;
    }
    return v;
}

inline std::optional<std::string> normalize_omid(std::string v, std::string* reason) {
    strip_prefix_ci(v, "https://w3id.org/oc/meta/");
    v = to_lower(v);
    auto slash = v.find('/');
    bool ok = slash != std::string::npos && slash > 0 && slash + 1 < v.size();
    if (ok) {
        for (std::size_t i = 0; i < slash; ++i)
            if (v[i] < 'a' || v[i] > 'z') ok = false;
        if (!all_digits(std::string_view(v).substr(slash + 1))) ok = false;
    }
    if (!ok) {
        if (reason) *reason = "omid must be <entity-prefix>/<digits>";
        return std::nullopt;
    }
    return v;
}

inline std::optional<std::string> normalize_isbn(std::string v, std::string* reason) {
    std::string out;
    for (char c : v)
        if (c != '-' && c != ' ') out += (c == 'x') ? 'X' : c;
    if (out.empty()) {
        if (reason) *reason = "isbn must be non-empty";
        return std::nullopt;
    }
    return out;
}

inline std::optional<std::string> normalize_wikidata(std::string v, std::string* reason) {
    strip_prefix_ci(v, "https://www.wikidata.org/wiki/") ||
        strip_prefix_ci(v, "https://www.wikidata.org/entity/");
    if (!v.empty() && v[0] == 'q') v[0] = 'Q';
    if (v.empty()) {
        if (reason) *reason = "wikidata id must be non-empty";
        return std::nullopt;
    }
    return v;
}

inline std::optional<std::string> normalize_opaque(std::string v, std::string* reason,
                                                   const char* what) {
    if (v.empty()) {
        if (reason) *reason = std::string(what) + " must be non-empty";
        return std::nullopt;
    }
    return v;
}

}  // namespace detail

/// Normalize a raw identifier for `scheme`: strips known resolver URL
/// prefixes, folds case per scheme convention, and validates. Returns
/// std::nullopt (with a reason) instead of throwing; see
/// normalize_external_id for the throwing form.
inline std::optional<std::string> try_normalize_value(PidScheme scheme, std::string_view raw,
                                                      std::string* reason = nullptr) {
    std::string v = trim(raw);
    if (v.empty()) {
        if (reason) *reason = "empty value";
        return std::nullopt;
    }
    // Interior whitespace never occurs in a real identifier and would break
    // the space-separated renderings downstream.
    if (scheme != PidScheme::isbn &&
        v.find_first_of(" \t\r\n\f\v") != std::string::npos) {
        if (reason) *reason = "value contains whitespace";
        return std::nullopt;
    }
    switch (scheme) {
        case PidScheme::doi: return detail::normalize_doi(std::move(v), reason);
        case PidScheme::issn: return detail::normalize_issn(std::move(v), reason);
        case PidScheme::pmid: return detail::normalize_pmid(std::move(v), reason);
        case PidScheme::pmcid: return detail::normalize_pmcid(std::move(v), reason);
        case PidScheme::openalex: return detail::normalize_openalex(std::move(v), reason);
        case PidScheme::omid: return detail::normalize_omid(std::move(v), reason);
        case PidScheme::isbn: return detail::normalize_isbn(std::move(v), reason);
        case PidScheme::wikidata: return detail::normalize_wikidata(std::move(v), reason);
        case PidScheme::mag: return detail::normalize_opaque(std::move(v), reason, "mag id");
        case PidScheme::fatcat: return detail::normalize_opaque(std::move(v), reason, "fatcat id");
    }
    if (reason) *reason = "unhandled scheme";
    return std::nullopt;
}

inline std::string normalize_external_id(PidScheme scheme, std::string_view raw) {
    std::string reason;
    auto v = try_normalize_value(scheme, raw, &reason);
    if (!v) throw MalformedValueError("malformed " + std::string(scheme_tag(scheme)) + " '" +
                                      std::string(raw) + "': " + reason);
    return *v;
}

/// Parse one "scheme:value" token. Splits at the first ':'; the value is
/// normalized per scheme. Non-throwing; `reason` explains a nullopt.
inline std::optional<Pid> try_parse_pid(std::string_view token, std::string* reason = nullptr) {
    std::string_view t = trim_view(token);
    auto colon = t.find(':');
    if (colon == std::string_view::npos) {
        if (reason) *reason = "missing ':' separator";
        return std::nullopt;
    }
    auto scheme = scheme_from_tag(to_lower(t.substr(0, colon)));
    if (!scheme) {
        if (reason) *reason = "unknown scheme '" + std::string(t.substr(0, colon)) + "'";
        return std::nullopt;
    }
    auto value = try_normalize_value(*scheme, t.substr(colon + 1), reason);
    if (!value) return std::nullopt;
    return Pid{*scheme, std::move(*value)};
}

inline Pid parse_pid(std::string_view token) {
    std::string_view t = trim_view(token);
    auto colon = t.find(':');
    if (colon == std::string_view::npos)
        throw MalformedValueError("pid token lacks ':': '" + std::string(token) + "'");
    auto scheme = scheme_from_tag(to_lower(t.substr(0, colon)));
    if (!scheme)
        throw UnknownSchemeError("unknown pid scheme '" + std::string(t.substr(0, colon)) + "'");
    return Pid{*scheme, normalize_external_id(*scheme, t.substr(colon + 1))};
}

/// Split a normalized DOI at the first '/' into registrant prefix and suffix.
inline DoiStructure doi_prefix(std::string_view doi_value) {
    auto slash = doi_value.find('/');
    if (slash == std::string_view::npos || doi_value.rfind("10.", 0) != 0 ||
        slash + 1 == doi_value.size())
        throw MalformedValueError("doi lacks prefix/suffix structure: '" + std::string(doi_value) +
                                  "'");
    return DoiStructure{std::string(doi_value.substr(0, slash)),
                        std::string(doi_value.substr(slash + 1))};
}

/// True iff the DOI ends in a version marker: "/v<digits>" or ".v<digits>",
/// case-insensitive and anchored at the end of the value.
inline bool has_version_suffix(std::string_view doi_value) {
    std::size_t end = doi_value.size();
    std::size_t i = end;
    while (i > 0 && doi_value[i - 1] >= '0' && doi_value[i - 1] <= '9') --i;
    if (i == end || i < 2) return false;  // no digits, or no room for marker
    char v = doi_value[i - 1];
    if (v != 'v' && v != 'V') return false;
    char sep = doi_value[i - 2];
    return sep == '/' || sep == '.';
}

/// True iff any lower-case indicator occurs as a substring of the DOI.
inline bool contains_preprint_indicator(std::string_view doi_value,
                                        std::span<const std::string> indicators) {
    for (const auto& ind : indicators)
        if (!ind.empty() && doi_value.find(ind) != std::string_view::npos) return true;
    return false;
}

}  // namespace bibmap
