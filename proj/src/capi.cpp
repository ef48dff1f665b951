#include "emergence/emergence.h"

#include "emergence/error.hpp"
#include "emergence/harness.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>
#include <string>

struct em_scenario {
    emergence::Scenario scenario;
};

namespace {

thread_local std::string last_error;

em_status fail(em_status status, std::string message) {
    last_error = std::move(message);
    return status;
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.data(), s.size() + 1);
    return out;
}

template <typename F>
em_status guarded(F&& body) {
    try {
        body();
        last_error.clear();
        return EM_OK;
    } catch (const emergence::Error& e) {
        switch (e.kind()) {
        case emergence::ErrorKind::Configuration: return fail(EM_ERR_CONFIG, e.what());
        case emergence::ErrorKind::Domain: return fail(EM_ERR_DOMAIN, e.what());
        case emergence::ErrorKind::Io: return fail(EM_ERR_IO, e.what());
        case emergence::ErrorKind::Numerical: return fail(EM_ERR_NUMERICAL, e.what());
        }
        return fail(EM_ERR_INTERNAL, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(EM_ERR_CONFIG, std::string("invalid JSON: ") + e.what());
    } catch (const std::bad_alloc&) {
        return fail(EM_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(EM_ERR_INTERNAL, e.what());
    }
}

bool missing(const void* p, const char* name, em_status& status) {
    if (p) return false;
    status = fail(EM_ERR_ARGUMENT, std::string(name) + " is NULL");
    return true;
}

}  // namespace

extern "C" {

const char* em_version(void) { return "0.1.0"; }

const char* em_last_error(void) { return last_error.c_str(); }

void em_string_free(char* s) { std::free(s); }

em_status em_set_cdf_cache_dir(const char* dir) {
    return guarded([&] { emergence::set_cdf_cache_dir(dir ? std::filesystem::path(dir) : std::filesystem::path()); });
}

em_status em_scenario_create(const char* config_json, em_scenario** out) {
    em_status st = EM_OK;
    if (missing(config_json, "config_json", st) || missing(out, "out", st)) return st;
    return guarded([&] {
        auto handle = std::make_unique<em_scenario>();
        handle->scenario = emergence::build_scenario(emergence::parse_config_text(config_json));
        *out = handle.release();
    });
}

void em_scenario_destroy(em_scenario* s) { delete s; }

em_status em_scenario_status(const em_scenario* s, int* certified, int* applicable) {
    em_status st = EM_OK;
    if (missing(s, "scenario", st)) return st;
    if (certified) *certified = s->scenario.certified ? 1 : 0;
    if (applicable) *applicable = s->scenario.applicable() ? 1 : 0;
    return EM_OK;
}

em_status em_scenario_trials(const em_scenario* s, uint64_t* trials) {
    em_status st = EM_OK;
    if (missing(s, "scenario", st) || missing(trials, "trials", st)) return st;
    *trials = s->scenario.config.trials;
    return EM_OK;
}

em_status em_constants_json(const em_scenario* s, char** out) {
    em_status st = EM_OK;
    if (missing(s, "scenario", st) || missing(out, "out", st)) return st;
    return guarded([&] { *out = dup(emergence::constants_document(s->scenario).dump(2) + "\n"); });
}

em_status em_check_json(const em_scenario* s, char** out) {
    em_status st = EM_OK;
    if (missing(s, "scenario", st) || missing(out, "out", st)) return st;
    return guarded([&] { *out = dup(emergence::check_document(s->scenario).dump(2) + "\n"); });
}

em_status em_simulate(const em_scenario* s, uint64_t trial, char** trace_csv, char** report_json) {
    em_status st = EM_OK;
    if (missing(s, "scenario", st)) return st;
    return guarded([&] {
        const auto& sc = s->scenario;
        emergence::Trace trace;
        const auto result = emergence::run_trial(sc, trial, &trace);
        std::string csv;
        if (trace_csv) {
            std::ostringstream os;
            trace.write_csv(os);
            csv = os.str();
        }
        std::string report;
        if (report_json) {
            emergence::Json j;
            j["trial"] = emergence::to_json(result);
            j["trajectory"] = emergence::to_json(emergence::verify_trajectory(trace, sc.constants, sc.params, sc.targets));
            j["j_violations"] = trace.j_violations;
            report = j.dump(2) + "\n";
        }
        char* a = trace_csv ? dup(csv) : nullptr;
        if (report_json) {
            try {
                *report_json = dup(report);
            } catch (...) {
                std::free(a);
                throw;
            }
        }
        if (trace_csv) *trace_csv = a;
    });
}

em_status em_montecarlo_json(const em_scenario* s, uint64_t n, char** out, em_verdict* verdict) {
    em_status st = EM_OK;
    if (missing(s, "scenario", st) || missing(out, "out", st)) return st;
    return guarded([&] {
        const auto& sc = s->scenario;
        const auto summary = emergence::monte_carlo(sc, n ? n : sc.config.trials, sc.config.threads);
        *out = dup(emergence::to_json(summary, sc).dump(2) + "\n");
        if (verdict) {
            switch (summary.verdict) {
            case emergence::Verdict::Respected: *verdict = EM_VERDICT_RESPECTED; break;
            case emergence::Verdict::Violated: *verdict = EM_VERDICT_VIOLATED; break;
            case emergence::Verdict::Inapplicable: *verdict = EM_VERDICT_INAPPLICABLE; break;
            }
        }
    });
}

em_status em_sweep_csv(const char* config_json, const char* grid_json, uint64_t n, char** out) {
    em_status st = EM_OK;
    if (missing(config_json, "config_json", st) || missing(grid_json, "grid_json", st) || missing(out, "out", st)) {
        return st;
    }
    return guarded([&] {
        emergence::Json base;
        emergence::Json grid;
        try {
            base = emergence::Json::parse(config_json);
        } catch (const nlohmann::json::parse_error& e) {
            emergence::config_error(std::string("config: not valid JSON: ") + e.what());
        }
        try {
            grid = emergence::Json::parse(grid_json);
        } catch (const nlohmann::json::parse_error& e) {
            emergence::config_error(std::string("grid: not valid JSON: ") + e.what());
        }
        std::optional<std::uint64_t> trials;
        if (n) trials = n;
        *out = dup(emergence::sweep(base, grid, trials));
    });
}

em_status em_quotient_norm(const double* values, size_t k, size_t d, int euclidean, double* out) {
    em_status st = EM_OK;
    if (missing(values, "values", st) || missing(out, "out", st)) return st;
    return guarded([&] {
        emergence::Matrix m(static_cast<emergence::Index>(k), static_cast<emergence::Index>(d));
        for (size_t i = 0; i < k; ++i) {
            for (size_t j = 0; j < d; ++j) m(static_cast<emergence::Index>(i), static_cast<emergence::Index>(j)) = values[i * d + j];
        }
        const auto kind = euclidean ? emergence::InnerProduct::Euclidean : emergence::InnerProduct::Pairwise;
        *out = emergence::quotient_norm(emergence::project_to_quotient(emergence::AgentConfiguration(m)), kind);
    });
}

em_status em_positive_root(double s, double q, double c1, double c2, double* out) {
    em_status st = EM_OK;
    if (missing(out, "out", st)) return st;
    return guarded([&] { *out = emergence::positive_root(s, q, c1, c2); });
}

em_status em_norm_cdf(const char* kind, double param, size_t m, double x, double* out) {
    em_status st = EM_OK;
    if (missing(kind, "kind", st) || missing(out, "out", st)) return st;
    return guarded([&] {
        emergence::NoiseSpec spec;
        switch (emergence::noise_kind_from_string(kind)) {
        case emergence::NoiseKind::Zero: spec = emergence::NoiseSpec::zero(); break;
        case emergence::NoiseKind::UniformBall: spec = emergence::NoiseSpec::ball(param); break;
        case emergence::NoiseKind::UniformCube: spec = emergence::NoiseSpec::cube(param); break;
        case emergence::NoiseKind::Gaussian: spec = emergence::NoiseSpec::gaussian(param); break;
        }
        *out = emergence::norm_cdf(spec, static_cast<emergence::Index>(m), x);
    });
}

}  // extern "C"
