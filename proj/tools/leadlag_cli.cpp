// Command-line front end for the leadlag pipeline. Everything goes through
// the public C API in leadlag/leadlag.h; this translation unit never touches
// the C++ core directly.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "leadlag/leadlag.h"

namespace {

int exit_code_for(leadlag_status st) {
    switch (st) {
        case LEADLAG_OK:
        case LEADLAG_PARTIAL:
            return 0;
        case LEADLAG_ERR_INVALID:
            return 1;
        case LEADLAG_ERR_DATA:
        case LEADLAG_ERR_STATE:
        case LEADLAG_ERR_IO:
            return 2;
        default:
            return 3;
    }
}

int fail(leadlag_status st) {
    std::cerr << "error: " << leadlag_last_error() << "\n";
    return exit_code_for(st);
}

struct ConfigHandle {
    leadlag_config* cfg = nullptr;
    ~ConfigHandle() { leadlag_config_free(cfg); }
};

int load_config_or_fail(const std::string& cli_path, int workers,
                        const std::string& output_dir, ConfigHandle& out) {
    std::string path = cli_path;
    if (path.empty()) {
        const char* env = std::getenv("LEADLAG_CONFIG");
        if (env) path = env;
    }
    if (path.empty()) {
        std::cerr << "error: no config file; pass --config or set LEADLAG_CONFIG\n";
        return 1;
    }
    leadlag_status st = leadlag_config_load(path.c_str(), &out.cfg);
    if (st != LEADLAG_OK) return fail(st);
    if (workers >= 0) {
        st = leadlag_config_set_workers(out.cfg, workers);
        if (st != LEADLAG_OK) return fail(st);
    }
    if (!output_dir.empty()) {
        st = leadlag_config_set_output_dir(out.cfg, output_dir.c_str());
        if (st != LEADLAG_OK) return fail(st);
    }
    return 0;
}

void print_file_head(const std::string& path, std::size_t max_lines,
                     const std::string& title) {
    std::ifstream f(path);
    if (!f) return;
    std::cout << title << "\n";
    std::string line;
    std::size_t count = 0;
    while (count < max_lines && std::getline(f, line)) {
        std::cout << "  " << line << "\n";
        ++count;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"leadlag: two-stage lead-lag detection pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string run_id = "default";
    bool resume = false;
    int workers = -1;
    long max_units = -1;
    std::uint64_t seed = 0;
    std::string output_dir;

    app.add_option("--config", config_path,
                   "Pipeline config file (fallback: $LEADLAG_CONFIG)");
    app.add_option("--run-id", run_id, "Run identifier under output_dir");
    app.add_flag("--resume", resume, "Resume an interrupted run from its checkpoint");
    app.add_option("--workers", workers, "Override worker count (0 = all cores)");
    app.add_option("--max-units", max_units,
                   "Stop after N units this invocation (testing hook)")
        ->group(""); // hidden
    app.add_option("--seed", seed, "Override the synth spec seed");
    app.add_option("--output-dir", output_dir, "Override run.output_dir");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic market fixture");
    std::string spec_path, synth_out;
    synth->add_option("--spec", spec_path, "Synth spec JSON file")->required();
    synth->add_option("--out", synth_out, "Fixture output directory")->required();

    auto* ingest = app.add_subcommand("ingest", "Ingestion utilities");
    bool validate = false;
    std::vector<std::string> ingest_grans{"daily"};
    ingest->add_flag("--validate", validate, "Parse and report without analyzing");
    ingest->add_option("--granularity", ingest_grans,
                       "Granularities to validate (default: daily)");

    auto* stage1 = app.add_subcommand("stage1", "Run Stage-1 coupling screening");
    auto* stage2 = app.add_subcommand("stage2", "Run Stage-2 lead-lag verification");
    auto* run = app.add_subcommand("run", "Run both stages");
    auto* report = app.add_subcommand("report", "Write ranking, cascade, industry reports");

    auto* plots = app.add_subcommand("plots", "Emit per-pair plot data files");
    int top_n = 10;
    std::string pair, plot_gran;
    plots->add_option("--top", top_n, "Emit the top-N ranked pairs (default 10)");
    plots->add_option("--pair", pair, "Specific LEADER,FOLLOWER pair");
    plots->add_option("--granularity", plot_gran, "Restrict to one granularity");

    // Global flags may also appear after the subcommand name.
    for (CLI::App* sub : {synth, ingest, stage1, stage2, run, report, plots})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (app.got_subcommand(synth)) {
        char* manifest = nullptr;
        leadlag_status st =
            leadlag_synth_generate(spec_path.c_str(), synth_out.c_str(), seed, &manifest);
        if (st != LEADLAG_OK) return fail(st);
        std::cout << manifest << "\n";
        leadlag_string_free(manifest);
        return 0;
    }

    ConfigHandle handle;
    if (int rc = load_config_or_fail(config_path, workers, output_dir, handle)) return rc;

    if (app.got_subcommand(ingest)) {
        if (!validate) {
            std::cerr << "error: ingest currently supports --validate only\n";
            return 1;
        }
        for (const std::string& g : ingest_grans) {
            char* report_json = nullptr;
            leadlag_status st = leadlag_ingest_validate(handle.cfg, g.c_str(), &report_json);
            if (st != LEADLAG_OK) return fail(st);
            std::cout << report_json << "\n";
            leadlag_string_free(report_json);
        }
        return 0;
    }

    auto run_dir = [&]() {
        // output_dir is echoed in the config dump; recover it to print paths.
        char* text = nullptr;
        std::string dir = "out";
        if (leadlag_config_dump(handle.cfg, &text) == LEADLAG_OK) {
            std::istringstream in(text);
            std::string line;
            while (std::getline(in, line)) {
                if (line.rfind("output_dir = \"", 0) == 0)
                    dir = line.substr(14, line.size() - 15);
            }
            leadlag_string_free(text);
        }
        return dir + "/" + run_id;
    };

    if (app.got_subcommand(stage1) || app.got_subcommand(run)) {
        leadlag_status st = leadlag_run_stage1(handle.cfg, run_id.c_str(), resume ? 1 : 0,
                                               max_units);
        if (st == LEADLAG_PARTIAL) {
            std::cout << "stage1 stopped at the unit limit; rerun with --resume to finish\n";
            return 0;
        }
        if (st != LEADLAG_OK) return fail(st);
        std::cout << "stage1 complete: " << run_dir() << "/stage1.csv\n";
        if (app.got_subcommand(stage1)) return 0;
    }

    if (app.got_subcommand(stage2) || app.got_subcommand(run)) {
        leadlag_status st = leadlag_run_stage2(handle.cfg, run_id.c_str(),
                                               app.got_subcommand(run) ? 1 : (resume ? 1 : 0),
                                               max_units);
        if (st == LEADLAG_PARTIAL) {
            std::cout << "stage2 stopped at the unit limit; rerun with --resume to finish\n";
            return 0;
        }
        if (st != LEADLAG_OK) return fail(st);
        std::cout << "stage2 complete: " << run_dir() << "/stage2.csv\n";
        return 0;
    }

    if (app.got_subcommand(report)) {
        leadlag_status st = leadlag_write_reports(handle.cfg, run_id.c_str());
        if (st != LEADLAG_OK) return fail(st);
        std::string dir = run_dir();
        std::cout << "reports written under " << dir << "\n";
        print_file_head(dir + "/ranking.csv", 11, "top 10 by significance:");
        print_file_head(dir + "/cascades.csv", 11, "cascades:");
        return 0;
    }

    if (app.got_subcommand(plots)) {
        leadlag_status st = leadlag_emit_plots(handle.cfg, run_id.c_str(), top_n,
                                               pair.empty() ? nullptr : pair.c_str(),
                                               plot_gran.empty() ? nullptr
                                                                 : plot_gran.c_str());
        if (st != LEADLAG_OK) return fail(st);
        std::cout << "plot data written under " << run_dir() << "/plots\n";
        return 0;
    }

    return 0;
}
