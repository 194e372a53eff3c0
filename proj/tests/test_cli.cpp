#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dgm.hpp"
#include "oracle.hpp"

using namespace ivmed;

namespace {

std::string cli() { return IVMED_CLI_PATH; }

std::string tmp_path(const std::string& name) {
    return std::string("/tmp/ivmed_cli_test_") + name;
}

int run_cmd(const std::string& cmd) {
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

void write_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    out << "w1,w2,w3,a,z";
    if (d.has_l()) out << ",l";
    out << ",m,y\n";
    for (std::size_t i = 0; i < d.n; ++i) {
        out << d.wat(i, 0) << ',' << d.wat(i, 1) << ',' << d.wat(i, 2) << ',' << d.a[i] << ','
            << d.z[i];
        if (d.has_l()) out << ',' << (*d.l)[i];
        out << ',' << d.m[i] << ',' << d.y[i] << "\n";
    }
}

const char* kEstimateConfig =
    "w = w1\n"
    "w = w2\n"
    "w = w3\n"
    "a = a\n"
    "z = z\n"
    "m = m\n"
    "y = y\n"
    "estimand = CIDE\n"
    "estimand = FS\n"
    "scenario = all_correct\n"
    "folds = 5\n"
    "seed = 7\n";

}  // namespace

TEST_CASE("cli: estimate produces a JSON report near the oracle truth") {
    StructuralDGM dgm = build_dgm(Setting::Single);
    Dataset d = sample(dgm, 2000, 7);
    write_csv(d, tmp_path("data.csv"));
    write_text(tmp_path("cfg"), kEstimateConfig);
    std::string out = tmp_path("report.json");
    int rc = run_cmd(cli() + " estimate --data " + tmp_path("data.csv") + " --config " +
                     tmp_path("cfg") + " --out " + out + " 2>/dev/null");
    REQUIRE(rc == 0);
    nlohmann::json rep = nlohmann::json::parse(slurp(out));
    REQUIRE(rep.size() == 2);
    CHECK(rep[0]["estimand"] == "CIDE");
    CHECK(rep[0]["n"] == 2000);
    CHECK(rep[0]["folds"] == 5);
    CHECK(rep[0]["seed"] == 7);
    double psi = rep[0]["psi_hat"].get<double>();
    double se = rep[0]["se"].get<double>();
    double truth = embedded_fixtures(Setting::Single).at("psi_CIDE");
    CHECK(std::fabs(psi - truth) < 3.0 * se);

    // identical invocation gives identical bytes
    std::string out2 = tmp_path("report2.json");
    rc = run_cmd(cli() + " estimate --data " + tmp_path("data.csv") + " --config " +
                 tmp_path("cfg") + " --out " + out2 + " 2>/dev/null");
    REQUIRE(rc == 0);
    CHECK(slurp(out) == slurp(out2));
}

TEST_CASE("cli: IVMED_SEED env overrides the config seed") {
    StructuralDGM dgm = build_dgm(Setting::Single);
    Dataset d = sample(dgm, 300, 8);
    write_csv(d, tmp_path("data8.csv"));
    write_text(tmp_path("cfg8"), kEstimateConfig);
    std::string out = tmp_path("rep8.json");
    int rc = run_cmd("IVMED_SEED=99 " + cli() + " estimate --data " + tmp_path("data8.csv") +
                     " --config " + tmp_path("cfg8") + " --out " + out + " 2>/dev/null");
    REQUIRE(rc == 0);
    nlohmann::json rep = nlohmann::json::parse(slurp(out));
    CHECK(rep[0]["seed"] == 99);
}

TEST_CASE("cli: constant exposure exits 3 with partial output") {
    StructuralDGM dgm = build_dgm(Setting::Single);
    Dataset d = sample(dgm, 300, 9);
    for (double& z : d.z) z = 0.0;
    write_csv(d, tmp_path("weak.csv"));
    write_text(tmp_path("wcfg"),
               "w = w1\nw = w2\nw = w3\na = a\nz = z\nm = m\ny = y\nestimand = CIDE\n");
    std::string out = tmp_path("weak.json");
    int rc = run_cmd(cli() + " estimate --data " + tmp_path("weak.csv") + " --config " +
                     tmp_path("wcfg") + " --out " + out + " 2>/dev/null");
    CHECK(rc == 3);
    nlohmann::json rep = nlohmann::json::parse(slurp(out));
    CHECK(rep[0]["status"] == "weak_instrument");
    CHECK(rep[0].contains("numerator_hat"));
    CHECK(!rep[0].contains("psi_hat"));
}

TEST_CASE("cli: validation problems exit 2") {
    write_text(tmp_path("badcfg"), "nonsense = 1\n");
    CHECK(run_cmd(cli() + " estimate --data /nonexistent.csv --config " + tmp_path("badcfg") +
                  " --out /tmp/x.json 2>/dev/null") == 2);
    StructuralDGM dgm = build_dgm(Setting::Single);
    write_csv(sample(dgm, 20, 1), tmp_path("ok.csv"));
    CHECK(run_cmd(cli() + " estimate --data " + tmp_path("ok.csv") + " --config " +
                  tmp_path("badcfg") + " --out /tmp/x.json 2>/dev/null") == 2);
    // bad CSV field cites the location
    write_text(tmp_path("bad.csv"), "w1,a,z,m,y\n0,0,oops,0,1\n");
    write_text(tmp_path("okcfg"), "w = w1\na = a\nz = z\nm = m\ny = y\nestimand = FS\n");
    CHECK(run_cmd(cli() + " estimate --data " + tmp_path("bad.csv") + " --config " +
                  tmp_path("okcfg") + " --out /tmp/x.json 2>/dev/null") == 2);
}

TEST_CASE("cli: simulate is byte-identical across jobs and runs") {
    write_text(tmp_path("plan"),
               "setting = single\nn = 200\nreplicates = 3\nscenario = all_correct\n"
               "estimand = FS\nbase_seed = 11\nfolds = 4\n");
    std::string o1 = tmp_path("sim1.csv"), o2 = tmp_path("sim2.csv"), o3 = tmp_path("sim3.csv");
    REQUIRE(run_cmd(cli() + " simulate --plan " + tmp_path("plan") + " --out " + o1 +
                    " --jobs 1 2>/dev/null") == 0);
    REQUIRE(run_cmd(cli() + " simulate --plan " + tmp_path("plan") + " --out " + o2 +
                    " --jobs 8 2>/dev/null") == 0);
    REQUIRE(run_cmd(cli() + " simulate --plan " + tmp_path("plan") + " --out " + o3 +
                    " --jobs 1 2>/dev/null") == 0);
    CHECK(slurp(o1) == slurp(o2));
    CHECK(slurp(o1) == slurp(o3));
    CHECK(slurp(o1).rfind("scenario,n,estimand,metric,value\n", 0) == 0);

    // json output and a bad plan
    REQUIRE(run_cmd(cli() + " simulate --plan " + tmp_path("plan") + " --out " +
                    tmp_path("sim.json") + " 2>/dev/null") == 0);
    CHECK(slurp(tmp_path("sim.json")).front() == '[');
    write_text(tmp_path("badplan"), "setting = single\nreplicates = 0\nscenario = all_correct\n");
    CHECK(run_cmd(cli() + " simulate --plan " + tmp_path("badplan") + " --out /tmp/x.csv" +
                  " 2>/dev/null") == 2);
}

TEST_CASE("cli: bundled paper plans parse and validate") {
    for (const char* plan : {"paper-single.plan", "paper-double.plan"}) {
        std::string path = std::string(IVMED_DATA_DIR) + "/" + plan;
        std::string text = slurp(path);
        REQUIRE(!text.empty());
        // full-size plans: swap the replicate count down and smoke-run them
        auto pos = text.find("replicates = 1000");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 17, "replicates = 1");
        // also shrink the sample sizes for the smoke run
        std::string shrunk;
        std::istringstream is(text);
        std::string line;
        while (std::getline(is, line)) {
            if (line.rfind("n = ", 0) == 0) continue;
            shrunk += line + "\n";
        }
        shrunk += "n = 200\n";
        write_text(tmp_path("pp"), shrunk);
        CHECK(run_cmd(cli() + " simulate --plan " + tmp_path("pp") + " --out " +
                      tmp_path("pp.csv") + " --jobs 2 2>/dev/null") == 0);
    }
}

TEST_CASE("cli: oracle output matches the committed fixtures") {
    std::string out = tmp_path("fixtures.txt");
    REQUIRE(run_cmd(cli() + " oracle --setting single > " + out + " 2>/dev/null") == 0);
    CHECK(slurp(out) == embedded_fixtures_text(Setting::Single));
    REQUIRE(run_cmd(cli() + " oracle --setting double > " + out + " 2>/dev/null") == 0);
    CHECK(slurp(out) == embedded_fixtures_text(Setting::Double));
    CHECK(run_cmd(cli() + " oracle --setting triple >/dev/null 2>&1") == 2);
}

TEST_CASE("cli: version flag") {
    CHECK(run_cmd(cli() + " --version >/dev/null 2>&1") == 0);
}
