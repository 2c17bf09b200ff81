#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "bibmap/pid.hpp"

#include "testutil.hpp"

using namespace bibmap;

TEST_CASE("parse_pid tokenizes scheme:value and normalizes per scheme") {
    Pid doi = parse_pid("doi:10.1007/S11192-019-03217-6");
    CHECK(doi.scheme == PidScheme::doi);
    CHECK(doi.value == "10.1007/s11192-019-03217-6");

    Pid issn = parse_pid("issn:0378-5955");
    CHECK(issn.scheme == PidScheme::issn);
    CHECK(issn.value == "0378-5955");

    CHECK_THROWS_AS(parse_pid("issn:0378-5954"), MalformedValueError);

    Pid omid = parse_pid("omid:br/06602375171");
    CHECK(omid.scheme == PidScheme::omid);
    CHECK(omid.value == "br/06602375171");
}

TEST_CASE("parse_pid error paths") {
    CHECK_THROWS_AS(parse_pid("noseparator"), MalformedValueError);
    CHECK_THROWS_AS(parse_pid("handle:4263537/4000"), UnknownSchemeError);
    CHECK_THROWS_AS(parse_pid("doi:"), MalformedValueError);
    CHECK_THROWS_AS(parse_pid("pmid:12a4"), MalformedValueError);
    CHECK_THROWS_AS(parse_pid("doi:10.1/a b"), MalformedValueError);

    std::string reason;
    CHECK_FALSE(try_parse_pid("handle:x", &reason).has_value());
    CHECK(reason.find("unknown scheme") != std::string::npos);
}

TEST_CASE("normalize_external_id strips resolver urls") {
    CHECK(normalize_external_id(PidScheme::openalex, "https://openalex.org/S2764583335") ==
          "S2764583335");
    CHECK(normalize_external_id(PidScheme::doi, "https://doi.org/10.1000/ABC") == "10.1000/abc");
    CHECK(normalize_external_id(PidScheme::pmcid, "PMC153388") == "PMC153388");
    CHECK(normalize_external_id(PidScheme::pmid, "https://pubmed.ncbi.nlm.nih.gov/123/") == "123");
    CHECK(normalize_external_id(PidScheme::pmid, "000123") == "123");
    CHECK(normalize_external_id(PidScheme::openalex, "w42") == "W42");
    CHECK_THROWS_AS(normalize_external_id(PidScheme::openalex, "A123"), MalformedValueError);
    CHECK_THROWS_AS(normalize_external_id(PidScheme::pmid, "0"), MalformedValueError);
}

TEST_CASE("issn normalization inserts hyphen and checks mod-11 digit") {
    CHECK(normalize_external_id(PidScheme::issn, "03785955") == "0378-5955");
    CHECK(normalize_external_id(PidScheme::issn, "0024-936x") == "0024-936X");
    CHECK_THROWS_AS(normalize_external_id(PidScheme::issn, "0378-59"), MalformedValueError);
    CHECK_THROWS_AS(normalize_external_id(PidScheme::issn, "0378-595X"), MalformedValueError);
}

TEST_CASE("issn validation agrees with the brute-force mod-11 oracle") {
    std::mt19937_64 rng(20240215);
    std::uniform_int_distribution<int> digit(0, 9);
    int valid_seen = 0;
    for (int i = 0; i < 10000; ++i) {
        std::string body;
        for (int d = 0; d < 7; ++d) body += static_cast<char>('0' + digit(rng));
        int check = digit(rng);
        body += check == 10 ? 'X' : static_cast<char>('0' + check);
        bool expect = testutil::issn_oracle_valid(body);
        bool got = try_normalize_value(PidScheme::issn, body).has_value();
        REQUIRE(got == expect);
        valid_seen += expect;
    }
    CHECK(valid_seen > 0);  // the sample exercised both branches
}

TEST_CASE("normalization is idempotent across schemes") {
    const std::pair<PidScheme, std::string> cases[] = {
        {PidScheme::doi, "https://doi.org/10.1000/ABC"},
        {PidScheme::issn, "03785955"},
        {PidScheme::pmid, "https://pubmed.ncbi.nlm.nih.gov/31041"},
        {PidScheme::pmcid, "pmc153388"},
        {PidScheme::openalex, "https://openalex.org/w123"},
        {PidScheme::omid, "br/06602375171"},
        {PidScheme::isbn, "978-88-203-4585-3"},
        {PidScheme::mag, "2741809807"},
        {PidScheme::wikidata, "q180445"},
        {PidScheme::fatcat, "container_abcde"},
    };
    for (const auto& [scheme, raw] : cases) {
        auto once = try_normalize_value(scheme, raw);
        REQUIRE(once.has_value());
        auto twice = try_normalize_value(scheme, *once);
        REQUIRE(twice.has_value());
        CHECK(*twice == *once);
    }
}

TEST_CASE("parse_pid round-trips through render") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> digit(0, 9);
    auto random_digits = [&](int n) {
        std::string s;
        for (int i = 0; i < n; ++i) s += static_cast<char>('0' + digit(rng));
        return s;
    };
    for (int i = 0; i < 200; ++i) {
        std::vector<Pid> pids;
        pids.push_back(Pid{PidScheme::doi, "10." + std::to_string(1000 + i) + "/x" +
                                               random_digits(6)});
        pids.push_back(Pid{PidScheme::pmid, std::to_string(1 + i) + random_digits(3)});
        pids.push_back(Pid{PidScheme::pmcid, "PMC" + random_digits(6)});
        pids.push_back(Pid{PidScheme::openalex, "W" + random_digits(8)});
        pids.push_back(Pid{PidScheme::omid, "br/" + random_digits(10)});
        std::string body;
        for (int d = 0; d < 7; ++d) body += static_cast<char>('0' + digit(rng));
        body += bibmap::detail::issn_check_digit(body);
        pids.push_back(Pid{PidScheme::issn, testutil::hyphenate_issn(body)});
        for (const auto& pid : pids) {
            Pid back = parse_pid(pid.render());
            CHECK(back == pid);
        }
    }
}

TEST_CASE("doi_prefix splits at the first slash and reconstructs") {
    DoiStructure s = doi_prefix("10.48550/arxiv.2205.01833");
    CHECK(s.prefix == "10.48550");
    CHECK(s.suffix == "arxiv.2205.01833");

    DoiStructure z = doi_prefix("10.5281/zenodo.12345");
    CHECK(z.prefix == "10.5281");
    CHECK(z.suffix == "zenodo.12345");

    CHECK_THROWS_AS(doi_prefix("10.1162"), MalformedValueError);

    const std::string dois[] = {"10.1/a", "10.1007/978-3-030-62466-8_28",
                                "10.21203/rs.3.rs-100/v2", "10.31219/osf.io/abcde"};
    for (const auto& doi : dois) {
        DoiStructure parts = doi_prefix(doi);
        CHECK(parts.prefix + "/" + parts.suffix == doi);
        CHECK(parts.prefix.rfind("10.", 0) == 0);
        CHECK(parts.prefix.find('/') == std::string::npos);
    }
}

TEST_CASE("has_version_suffix matches /vN and .vN at the end only") {
    CHECK(has_version_suffix("10.21203/rs.3.rs-100/v2"));
    CHECK(has_version_suffix("10.5555/paper.v3"));
    CHECK(has_version_suffix("10.1101/2020.03.12.988865/V1"));
    CHECK_FALSE(has_version_suffix("10.1162/qss_a_00023"));
    CHECK_FALSE(has_version_suffix("10.1000/v2x"));       // digits not at end
    CHECK_FALSE(has_version_suffix("10.1000/av2x1"));     // marker not anchored
    CHECK_FALSE(has_version_suffix("10.1000/version2"));  // 'n2' not '.v2'
    CHECK_FALSE(has_version_suffix("10.1000/x.v"));       // no digits
}

TEST_CASE("contains_preprint_indicator is plain substring search") {
    std::vector<std::string> indicators{"/arxiv", "/osf.io"};
    CHECK(contains_preprint_indicator("10.48550/arxiv.2306.16191", indicators));
    CHECK_FALSE(contains_preprint_indicator("10.1007/978-3-030-62466-8_28", {indicators.data(), 1}));
    std::vector<std::string> osf{"/osf.io"};
    CHECK(contains_preprint_indicator("10.31219/osf.io/abcde", osf));
}
