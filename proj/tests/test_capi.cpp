// Exercises the shared library through its C header only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "emergence/emergence.h"

#include <cmath>
#include <cstring>
#include <string>

namespace {

struct Text {
    char* p = nullptr;
    ~Text() { em_string_free(p); }
    std::string str() const { return p ? p : ""; }
};

const char* kConfig = R"j({"preset": "flocking", "k": 4, "seed": 2, "trials": 10, "noise": {"kind": "zero"}})j";

}  // namespace

TEST_CASE("version and scalar helpers") {
    CHECK(std::strlen(em_version()) > 0);

    const double v[] = {1.0, -1.0};
    double out = 0.0;
    REQUIRE(em_quotient_norm(v, 2, 1, 0, &out) == EM_OK);
    CHECK(out == doctest::Approx(2.0));
    REQUIRE(em_quotient_norm(v, 2, 1, 1, &out) == EM_OK);
    CHECK(out == doctest::Approx(std::sqrt(2.0)));

    REQUIRE(em_positive_root(2, 1, 3, 4, &out) == EM_OK);
    CHECK(out == doctest::Approx(4.0));
    CHECK(em_positive_root(1, 2, 3, 4, &out) == EM_ERR_DOMAIN);
    CHECK(std::strlen(em_last_error()) > 0);

    REQUIRE(em_norm_cdf("ball", 1.0, 3, 0.5, &out) == EM_OK);
    CHECK(out == doctest::Approx(0.125));
    CHECK(em_norm_cdf("levy", 1.0, 3, 0.5, &out) != EM_OK);
    CHECK(em_norm_cdf(nullptr, 1.0, 3, 0.5, &out) == EM_ERR_ARGUMENT);
}

TEST_CASE("scenario lifecycle") {
    em_scenario* s = nullptr;
    REQUIRE(em_scenario_create(kConfig, &s) == EM_OK);
    REQUIRE(s != nullptr);

    int certified = 0;
    int applicable = 0;
    REQUIRE(em_scenario_status(s, &certified, &applicable) == EM_OK);
    CHECK(certified == 1);
    CHECK(applicable == 1);
    uint64_t trials = 0;
    REQUIRE(em_scenario_trials(s, &trials) == EM_OK);
    CHECK(trials == 10);

    Text constants;
    REQUIRE(em_constants_json(s, &constants.p) == EM_OK);
    CHECK(constants.str().find("\"U0\"") != std::string::npos);
    Text check;
    REQUIRE(em_check_json(s, &check.p) == EM_OK);
    CHECK(check.str().find("hypotheses") != std::string::npos);

    Text csv;
    Text report;
    REQUIRE(em_simulate(s, 0, &csv.p, &report.p) == EM_OK);
    CHECK(csv.str().rfind("t,time,norm_x,norm_y,phi,noise_norm,clipped_flag\n", 0) == 0);

    Text a;
    Text b;
    em_verdict verdict = EM_VERDICT_VIOLATED;
    REQUIRE(em_montecarlo_json(s, 0, &a.p, &verdict) == EM_OK);
    CHECK(verdict == EM_VERDICT_RESPECTED);
    REQUIRE(em_montecarlo_json(s, 0, &b.p, &verdict) == EM_OK);
    CHECK(a.str() == b.str());

    em_scenario_destroy(s);
    em_scenario_destroy(nullptr);
}

TEST_CASE("errors come back as codes") {
    em_scenario* s = nullptr;
    CHECK(em_scenario_create(R"j({"k": 1})j", &s) == EM_ERR_CONFIG);
    CHECK(s == nullptr);
    CHECK(std::string(em_last_error()).find("config.k") != std::string::npos);
    CHECK(em_scenario_create("{", &s) == EM_ERR_CONFIG);
    CHECK(em_scenario_create(nullptr, &s) == EM_ERR_ARGUMENT);
    CHECK(em_constants_json(nullptr, nullptr) == EM_ERR_ARGUMENT);

    Text sweep;
    REQUIRE(em_sweep_csv(kConfig, R"j({"noise.radius": []})j", 1, &sweep.p) == EM_OK);
    CHECK(sweep.str() == "noise.radius,n,empirical,wilson_lo,wilson_hi,bound,time_bound,verdict,error\n");
}
