#pragma once

// Phase orchestration shared by the CLI and the integration tests. Each
// phase validates its inputs before touching the output directory, writes a
// small <phase>_meta.json sidecar (input fingerprints, duration), and leaves
// the table files exactly as specified by the downstream consumers.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bibmap/classifier.hpp"
#include "bibmap/defects.hpp"
#include "bibmap/errors.hpp"
#include "bibmap/index.hpp"
#include "bibmap/ingest.hpp"
#include "bibmap/mapper.hpp"
#include "bibmap/provenance.hpp"
#include "bibmap/report.hpp"
#include "bibmap/resolver.hpp"
#include "bibmap/version.hpp"

namespace bibmap {

struct RunConfig {
    std::filesystem::path meta_csv;
    std::filesystem::path oa_works;
    std::filesystem::path oa_sources;
    std::filesystem::path provenance;
    std::filesystem::path prefix_list;
    std::filesystem::path indicator_list;
    std::filesystem::path out_dir;
    std::filesystem::path index_dir;
    std::vector<std::string> companion_types;  // empty = classifier default
    unsigned workers = 1;
    std::size_t memory_budget_mb = 256;
    bool force = false;
    std::uint64_t sample_seed = 42;
};

namespace detail {

class PhaseTimer {
public:
    std::uint64_t elapsed_ms() const {
        auto d = std::chrono::steady_clock::now() - start_;
        return static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::milliseconds>(d).count());
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void require_input(const std::filesystem::path& p, const std::string& flag) {
    if (p.empty()) throw ConfigError("missing required path: " + flag);
    if (!std::filesystem::exists(p))
        throw ConfigError("input does not exist: " + p.string() + " (" + flag + ")");
}

inline void write_phase_meta(const std::filesystem::path& path, nlohmann::json meta) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw_io_failure("cannot write phase meta", path.string());
    out << meta.dump(2) << '\n';
}

inline nlohmann::json fingerprints_json(const std::vector<std::filesystem::path>& inputs) {
    auto arr = nlohmann::json::array();
    for (const auto& p : inputs) {
        FileFingerprint fp = fingerprint_file(p);
        arr.push_back({{"path", fp.path}, {"bytes", fp.bytes}, {"fnv1a", fp.fnv1a}});
    }
    return arr;
}

inline std::size_t budget_bytes(const RunConfig& cfg) {
    return std::max<std::size_t>(cfg.memory_budget_mb, 16) << 20;
}

inline ClassifierConfig load_classifier_config(const RunConfig& cfg) {
    require_input(cfg.prefix_list, "--prefixes");
    require_input(cfg.indicator_list, "--indicators");
    ClassifierConfig config = load_config(cfg.prefix_list, cfg.indicator_list);
    if (!cfg.companion_types.empty())
        config.companion_work_types = {cfg.companion_types.begin(), cfg.companion_types.end()};
    return config;
}

}  // namespace detail

/// Ingest both snapshot files and build the persistent index. Inputs are
/// validated before anything is written, so a bad invocation leaves no
/// partial index behind.
inline IndexBuildResult run_build_index(const RunConfig& cfg) {
    detail::require_input(cfg.oa_works, "--oa-works");
    detail::require_input(cfg.oa_sources, "--oa-sources");
    if (cfg.index_dir.empty()) throw ConfigError("missing required path: --index");
    if (IndexBuilder::index_exists(cfg.index_dir) && !cfg.force)
        throw ConfigError("index already exists at " + cfg.index_dir.string() +
                          "; pass --force to rebuild");
    detail::PhaseTimer timer;
    std::error_code ec;
    std::filesystem::create_directories(cfg.index_dir, ec);
    DefectLog defects(cfg.index_dir / "index_defects.csv");
    IndexBuilder builder(cfg.index_dir, detail::budget_bytes(cfg), &defects);
    std::uint64_t lines_in = 0, skipped = 0;
    auto ingest = [&](const std::filesystem::path& path, OaKind kind) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw_io_failure("cannot open snapshot", path.string());
        OpenAlexReader reader(in, kind, path.filename().string(), defects);
        while (auto rec = reader.next()) builder.add(*rec);
        lines_in += reader.lines_in();
        skipped += reader.lines_skipped();
    };
    ingest(cfg.oa_works, OaKind::work);
    ingest(cfg.oa_sources, OaKind::source);
    IndexBuildResult result = builder.finalize();

    nlohmann::json meta;
    meta["inputs"] = detail::fingerprints_json({cfg.oa_works, cfg.oa_sources});
    meta["lines_in"] = lines_in;
    meta["lines_skipped"] = skipped;
    meta["records"] = result.records_in;
    meta["keys"] = result.keys;
    meta["pairs"] = result.pairs;
    meta["duplicate_records"] = result.duplicate_records;
    meta["duration_ms"] = timer.elapsed_ms();
    detail::write_phase_meta(cfg.index_dir / "index_meta.json", std::move(meta));
    return result;
}

/// Map the source dump against a finished index, producing the three outcome
/// tables, inverted grouping table, and stats.json in out_dir.
inline MappingStats run_map(const RunConfig& cfg) {
    detail::require_input(cfg.meta_csv, "--meta-csv");
    if (cfg.index_dir.empty() || !IndexBuilder::index_exists(cfg.index_dir))
        throw MissingPhaseOutputsError("no finished index at '" + cfg.index_dir.string() +
                                       "'; run build-index first");
    if (cfg.out_dir.empty()) throw ConfigError("missing required path: --out");
    detail::PhaseTimer timer;
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    PidIndex index = PidIndex::open(cfg.index_dir);
    DefectLog defects(cfg.out_dir / "map_defects.csv");
    std::ifstream in(cfg.meta_csv, std::ios::binary);
    if (!in) throw_io_failure("cannot open meta csv", cfg.meta_csv.string());
    MetaCsvReader reader(in, cfg.meta_csv.filename().string(), defects);
    MappingStats stats = run_mapping(reader, index, cfg.out_dir, detail::budget_bytes(cfg));

    nlohmann::json meta;
    meta["inputs"] = detail::fingerprints_json({cfg.meta_csv});
    meta["rows_in"] = reader.rows_in();
    meta["rows_skipped"] = reader.rows_skipped();
    meta["token_defects"] = reader.token_defects();
    meta["duration_ms"] = timer.elapsed_ms();
    detail::write_phase_meta(cfg.out_dir / "map_meta.json", std::move(meta));
    return stats;
}

/// Classify the multi-mapped table (requires the map phase and the index's
/// metadata store).
inline ClassifyResult run_classify(const RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw ConfigError("missing required path: --out");
    if (!std::filesystem::exists(cfg.out_dir / "multi_mapped.csv"))
        throw MissingPhaseOutputsError("no multi_mapped.csv in '" + cfg.out_dir.string() +
                                       "'; run map first");
    if (cfg.index_dir.empty() || !IndexBuilder::index_exists(cfg.index_dir))
        throw MissingPhaseOutputsError("no finished index at '" + cfg.index_dir.string() +
                                       "'; run build-index first");
    ClassifierConfig config = detail::load_classifier_config(cfg);
    detail::PhaseTimer timer;
    MetaStore store = MetaStore::open(cfg.index_dir);
    DefectLog defects(cfg.out_dir / "classify_defects.csv");
    ClassifyResult result =
        classify_all(cfg.out_dir / "multi_mapped.csv", store, config, cfg.out_dir, &defects);

    nlohmann::json meta;
    meta["inputs"] = detail::fingerprints_json({cfg.prefix_list, cfg.indicator_list});
    meta["config_fingerprints"] = {{"prefixes", config.prefixes_fingerprint()},
                                   {"indicators", config.indicators_fingerprint()}};
    meta["rows"] = result.rows;
    meta["work_rows"] = result.work_rows;
    meta["source_rows"] = result.source_rows;
    meta["mixed_rows"] = result.mixed_rows;
    meta["duration_ms"] = timer.elapsed_ms();
    detail::write_phase_meta(cfg.out_dir / "classify_meta.json", std::move(meta));
    return result;
}

/// Join non-mapped BRs with provenance records and emit the source-set
/// matrix.
inline ProvenanceMatrix run_provenance(const RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw ConfigError("missing required path: --out");
    if (!std::filesystem::exists(cfg.out_dir / "non_mapped.csv"))
        throw MissingPhaseOutputsError("no non_mapped.csv in '" + cfg.out_dir.string() +
                                       "'; run map first");
    detail::require_input(cfg.provenance, "--provenance");
    detail::PhaseTimer timer;
    DefectLog defects(cfg.out_dir / "provenance_defects.csv");
    std::ifstream in(cfg.provenance, std::ios::binary);
    if (!in) throw_io_failure("cannot open provenance input", cfg.provenance.string());
    ProvenanceReader reader(in, cfg.provenance.filename().string(), defects);
    ProvenanceMatrix matrix = aggregate(cfg.out_dir / "non_mapped.csv", reader,
                                        cfg.out_dir / "tmp", detail::budget_bytes(cfg));
    std::error_code ec;
    std::filesystem::remove_all(cfg.out_dir / "tmp", ec);
    write_provenance_matrix_csv(matrix, cfg.out_dir / "provenance_matrix.csv");

    nlohmann::json meta;
    meta["inputs"] = detail::fingerprints_json({cfg.provenance});
    meta["joined"] = matrix.joined;
    meta["unknown"] = matrix.unknown;
    meta["matrix"] = provenance_matrix_to_json(matrix);
    meta["duration_ms"] = timer.elapsed_ms();
    detail::write_phase_meta(cfg.out_dir / "provenance_meta.json", std::move(meta));
    return matrix;
}

/// Rebuild the summary from table files and write the report outputs.
inline RunSummary run_report(const RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw ConfigError("missing required path: --out");
    RunSummary summary = build_summary(cfg.out_dir);
    write_summary_outputs(summary, cfg.out_dir);
    return summary;
}

/// build-index -> map -> classify -> provenance (if input given) -> report.
/// `phases` filters which of map/classify/provenance/report run; index build
/// runs whenever the index is missing or --force is set.
inline RunSummary run_all(const RunConfig& cfg, const std::set<std::string>& phases = {}) {
    auto enabled = [&](const char* name) { return phases.empty() || phases.count(name) > 0; };
    if (!IndexBuilder::index_exists(cfg.index_dir) || cfg.force) run_build_index(cfg);
    if (enabled("map")) run_map(cfg);
    if (enabled("classify")) run_classify(cfg);
    if (enabled("provenance") && !cfg.provenance.empty()) run_provenance(cfg);
    if (enabled("report")) return run_report(cfg);
    return RunSummary{};
}

}  // namespace bibmap
