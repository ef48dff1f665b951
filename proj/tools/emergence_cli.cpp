// Command-line front end. Talks to the library through the C interface only.

#include "emergence/emergence.h"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

namespace {

enum Exit { kOk = 0, kConfig = 1, kInapplicable = 2, kViolated = 3, kRuntime = 4 };

struct Failure {
    int code;
    std::string message;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure{kConfig, "cannot read " + path};
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text) || !out.flush()) throw Failure{kRuntime, "cannot write " + path};
}

void check(em_status status) {
    if (status == EM_OK) return;
    const int code = status == EM_ERR_CONFIG || status == EM_ERR_DOMAIN || status == EM_ERR_IO ? kConfig : kRuntime;
    throw Failure{code, em_last_error()};
}

// Owns a string handed out by the library.
struct Text {
    char* p = nullptr;
    ~Text() { em_string_free(p); }
    std::string str() const { return p ? p : ""; }
};

using ScenarioPtr = std::unique_ptr<em_scenario, decltype(&em_scenario_destroy)>;

ScenarioPtr load(const std::string& path) {
    const std::string text = read_file(path);
    em_scenario* s = nullptr;
    check(em_scenario_create(text.c_str(), &s));
    return {s, &em_scenario_destroy};
}

bool applicable(const em_scenario* s) {
    int certified = 0;
    int ok = 0;
    check(em_scenario_status(s, &certified, &ok));
    return ok != 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noisy emergence simulator and theorem checker"};
    app.require_subcommand(1);
    std::string cdf_cache;
    app.add_option("--cdf-cache", cdf_cache, "Directory for persisted cube CDF tables");

    std::string config;
    bool require_certified = false;
    std::string trace_path;
    std::string report_path;
    std::uint64_t trial = 0;
    std::uint64_t trials = 0;
    std::string out_path;
    std::string grid_path;

    auto* constants = app.add_subcommand("constants", "Print the initial-state constants as JSON");
    auto* check_cmd = app.add_subcommand("check", "Print the operator and theorem hypothesis report");
    auto* simulate = app.add_subcommand("simulate", "Run one trial and write its trace");
    auto* montecarlo = app.add_subcommand("montecarlo", "Estimate the emergence probability against the bound");
    auto* sweep = app.add_subcommand("sweep", "Monte Carlo over a parameter grid");

    for (auto* sub : {constants, check_cmd, simulate, montecarlo, sweep}) {
        sub->add_option("config", config, "Scenario JSON")->required();
    }
    for (auto* sub : {constants, check_cmd, simulate, montecarlo}) {
        sub->add_flag("--require-certified", require_certified, "Exit 2 unless all hypotheses hold");
    }
    simulate->add_option("--trace", trace_path, "Trace CSV output")->required();
    simulate->add_option("--trial", trial, "Trial index");
    simulate->add_option("--report", report_path, "Write the trial report here instead of stdout");
    montecarlo->add_option("-n", trials, "Number of trials (default: from config)");
    montecarlo->add_option("--out", out_path, "Summary JSON output")->required();
    sweep->add_option("--grid", grid_path, "Grid JSON: parameter path -> list of values")->required();
    sweep->add_option("--out", out_path, "Sweep CSV output")->required();
    sweep->add_option("-n", trials, "Trials per grid point (default: from config)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!cdf_cache.empty()) check(em_set_cdf_cache_dir(cdf_cache.c_str()));

        if (*sweep) {
            const std::string base = read_file(config);
            const std::string grid = read_file(grid_path);
            Text csv;
            check(em_sweep_csv(base.c_str(), grid.c_str(), trials, &csv.p));
            write_file(out_path, csv.str());
            return kOk;
        }

        auto scenario = load(config);
        const bool inapplicable = require_certified && !applicable(scenario.get());

        if (*constants || *check_cmd) {
            Text json;
            check(*constants ? em_constants_json(scenario.get(), &json.p) : em_check_json(scenario.get(), &json.p));
            std::cout << json.str();
            return inapplicable ? kInapplicable : kOk;
        }
        if (inapplicable) {
            std::cerr << "hypotheses do not hold for this scenario (see `check`)\n";
            return kInapplicable;
        }
        if (*simulate) {
            Text csv;
            Text report;
            check(em_simulate(scenario.get(), trial, &csv.p, &report.p));
            write_file(trace_path, csv.str());
            if (report_path.empty()) {
                std::cout << report.str();
            } else {
                write_file(report_path, report.str());
            }
            return kOk;
        }
        Text json;
        em_verdict verdict = EM_VERDICT_INAPPLICABLE;
        check(em_montecarlo_json(scenario.get(), trials, &json.p, &verdict));
        write_file(out_path, json.str());
        if (verdict == EM_VERDICT_VIOLATED) {
            std::cerr << "bound violated: see " << out_path << "\n";
            return kViolated;
        }
        return kOk;
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << "\n";
        return f.code;
    }
}
