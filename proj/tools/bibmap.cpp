// bibmap command-line entry point. Subcommands mirror the pipeline phases;
// `run-all` chains them. Exit codes are stable:
//   0  success
//   2  configuration / usage error
//   3  I/O failure
//   4  data error (bad headers, malformed config entries, inconsistent outputs)
//   5  missing prerequisite phase outputs

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bibmap/bibmap.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitData = 4;
constexpr int kExitMissingPhase = 5;

struct CliPaths {
    std::string meta_csv, oa_works, oa_sources, provenance;
    std::string prefixes, indicators, out, index;
    std::string companion_types;
    unsigned workers = 1;
    std::size_t memory_mb = 256;
    bool force = false;
};

void apply_config_file(CliPaths& paths, const std::string& config_path) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw bibmap::ConfigError("cannot open config file: " + config_path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw bibmap::ConfigError("config file is not a json object: " + config_path);
    auto set_str = [&](const char* key, std::string& target) {
        if (target.empty() && j.contains(key)) target = j.at(key).get<std::string>();
    };
    set_str("meta_csv", paths.meta_csv);
    set_str("oa_works", paths.oa_works);
    set_str("oa_sources", paths.oa_sources);
    set_str("provenance", paths.provenance);
    set_str("prefixes", paths.prefixes);
    set_str("indicators", paths.indicators);
    set_str("out", paths.out);
    set_str("index", paths.index);
    set_str("companion_types", paths.companion_types);
    if (paths.workers == 1 && j.contains("workers")) paths.workers = j.at("workers").get<unsigned>();
    if (paths.memory_mb == 256 && j.contains("memory_mb"))
        paths.memory_mb = j.at("memory_mb").get<std::size_t>();
}

bibmap::RunConfig to_run_config(const CliPaths& paths) {
    bibmap::RunConfig cfg;
    cfg.meta_csv = paths.meta_csv;
    cfg.oa_works = paths.oa_works;
    cfg.oa_sources = paths.oa_sources;
    cfg.provenance = paths.provenance;
    cfg.prefix_list = paths.prefixes;
    cfg.indicator_list = paths.indicators;
    cfg.out_dir = paths.out;
    cfg.index_dir = paths.index;
    cfg.workers = paths.workers == 0 ? 1 : paths.workers;
    cfg.memory_budget_mb = paths.memory_mb;
    cfg.force = paths.force;
    std::string t;
    for (char c : paths.companion_types) {
        if (c == ',') {
            if (!t.empty()) cfg.companion_types.push_back(t);
            t.clear();
        } else {
            t += c;
        }
    }
    if (!t.empty()) cfg.companion_types.push_back(t);
    return cfg;
}

void add_common_flags(CLI::App* cmd, CliPaths& paths, std::string& config_file) {
    cmd->add_option("--config", config_file, "JSON config file; flags override its values");
    cmd->add_option("--meta-csv", paths.meta_csv, "source collection CSV dump");
    cmd->add_option("--oa-works", paths.oa_works, "works JSON-Lines snapshot (optionally .gz)");
    cmd->add_option("--oa-sources", paths.oa_sources, "sources JSON-Lines snapshot (optionally .gz)");
    cmd->add_option("--provenance", paths.provenance, "provenance snapshots (json-lines or csv)");
    cmd->add_option("--prefixes", paths.prefixes, "preprint DOI prefix list");
    cmd->add_option("--indicators", paths.indicators, "preprint indicator list");
    cmd->add_option("--out", paths.out, "output directory");
    cmd->add_option("--index", paths.index, "index directory");
    cmd->add_option("--workers", paths.workers, "worker count hint (phases currently run sequentially)");
    cmd->add_option("--memory-mb", paths.memory_mb, "memory budget for sort buffers");
    cmd->add_option("--companion-types", paths.companion_types,
                    "comma-separated work types treated as companion records");
    cmd->add_flag("--force", paths.force, "rebuild over an existing index");
}

int dispatch(const std::string& subcommand, bibmap::RunConfig cfg,
             const std::set<std::string>& phases, std::size_t sample_n,
             const std::string& resolver_fixture, std::uint64_t seed) {
    using namespace bibmap;
    if (subcommand == "build-index") {
        IndexBuildResult r = run_build_index(cfg);
        std::cerr << "indexed " << r.records_in << " records, " << r.keys << " keys, " << r.pairs
                  << " pairs\n";
    } else if (subcommand == "map") {
        MappingStats s = run_map(cfg);
        std::cerr << "processed " << s.processed << ": " << s.one_to_one << " one-to-one, "
                  << s.multi_mapped << " multi, "
                  << s.non_mapped_with_pids + s.non_mapped_without_pids << " non-mapped\n";
    } else if (subcommand == "classify") {
        ClassifyResult r = run_classify(cfg);
        std::cerr << "classified " << r.rows << " rows (" << r.work_rows << " work, "
                  << r.source_rows << " source, " << r.mixed_rows << " mixed-kind)\n";
    } else if (subcommand == "provenance") {
        ProvenanceMatrix m = run_provenance(cfg);
        std::cerr << "joined " << m.joined << " non-mapped rows, " << m.unknown
                  << " without provenance\n";
    } else if (subcommand == "report") {
        RunSummary s = run_report(cfg);
        std::cout << render_report(s, ReportFormat::text);
    } else if (subcommand == "run-all") {
        RunSummary s = run_all(cfg, phases);
        std::cout << render_report(s, ReportFormat::text);
    } else if (subcommand == "dump-index") {
        if (cfg.index_dir.empty() || !IndexBuilder::index_exists(cfg.index_dir))
            throw MissingPhaseOutputsError("no finished index at '" + cfg.index_dir.string() +
                                           "'");
        PidIndex index = PidIndex::open(cfg.index_dir);
        CsvWriter csv(std::cout);
        csv.write_row({"scheme", "value", "oa_id"});
        index.for_each_triple([&](const std::string& scheme, const std::string& value,
                                  const std::string& oa_id) {
            csv.write_row({scheme, value, oa_id});
        });
    } else if (subcommand == "verify-sample") {
        if (cfg.out_dir.empty() || !std::filesystem::exists(cfg.out_dir / "verdicts.csv"))
            throw MissingPhaseOutputsError("no verdicts.csv in '" + cfg.out_dir.string() +
                                           "'; run classify first");
        if (cfg.index_dir.empty() || !IndexBuilder::index_exists(cfg.index_dir))
            throw MissingPhaseOutputsError("no finished index at '" + cfg.index_dir.string() +
                                           "'");
        MetaStore store = MetaStore::open(cfg.index_dir);
        std::unique_ptr<DoiResolver> resolver;
        if (!resolver_fixture.empty())
            resolver = std::make_unique<FixtureResolver>(resolver_fixture);
        else
            resolver = std::make_unique<UnavailableResolver>();
        AuditResult r = run_verify_sample(cfg.out_dir / "verdicts.csv", store, *resolver,
                                          sample_n, seed, cfg.out_dir / "audit.csv");
        std::cerr << "sampled " << r.rows_sampled << " rows: " << r.dois_resolved
                  << " resolved, " << r.dois_unresolved << " unresolved"
                  << (r.complete ? "" : " (audit incomplete: resolver unavailable)") << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bibmap: map bibliographic resources between metadata collections by shared PIDs"};
    app.require_subcommand(1);

    CliPaths paths;
    std::string config_file;
    if (const char* env = std::getenv("BIBMAP_CONFIG")) config_file = env;

    std::vector<std::string> phase_names;
    std::size_t sample_n = 10;
    std::uint64_t seed = 42;
    std::string resolver_fixture;

    for (const char* name : {"build-index", "map", "classify", "provenance", "report", "run-all",
                             "dump-index", "verify-sample"}) {
        CLI::App* cmd = app.add_subcommand(name);
        add_common_flags(cmd, paths, config_file);
        if (std::string(name) == "run-all")
            cmd->add_option("--phase", phase_names,
                            "restrict run-all to these phases (map/classify/provenance/report)");
        if (std::string(name) == "verify-sample") {
            cmd->add_option("-n,--sample", sample_n, "rows to sample");
            cmd->add_option("--seed", seed, "sampling seed");
            cmd->add_option("--resolver-fixture", resolver_fixture,
                            "json-lines doi fixture for offline resolution");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        if (!config_file.empty()) apply_config_file(paths, config_file);
        bibmap::RunConfig cfg = to_run_config(paths);
        cfg.sample_seed = seed;
        std::set<std::string> phases(phase_names.begin(), phase_names.end());
        return dispatch(app.get_subcommands().front()->get_name(), std::move(cfg), phases,
                        sample_n, resolver_fixture, seed);
    } catch (const bibmap::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const bibmap::MissingPhaseOutputsError& e) {
        std::cerr << "missing prerequisite: " << e.what() << "\n";
        return kExitMissingPhase;
    } catch (const bibmap::MissingColumnError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const bibmap::MalformedEntryError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const bibmap::InconsistentOutputsError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const bibmap::IoFailureError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const bibmap::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kExitData;
    }
}
