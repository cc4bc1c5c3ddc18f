#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace {

struct RunResult {
    int exit_code;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    std::string cmd = std::string(RELUCERT_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[512];
    while (fgets(buf, sizeof(buf), pipe))
        out += buf;
    int status = pclose(pipe);
    return {WEXITSTATUS(status), out};
}

std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = "/tmp/" + name;
    std::ofstream f(path);
    f << content;
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

const char* kNet = R"({"layers": [
    {"weights": [[1, 1], [1, -1]], "bias": [0, 0]},
    {"weights": [[1, 2], [0, 1]], "bias": [0, 0]}
]})";

} // namespace

TEST_SUITE("cli") {

TEST_CASE("verify exits 0 on a robust instance") {
    std::string net = write_temp("cli_net.json", kNet);
    std::string prop = write_temp("cli_prop.json",
        R"({"center": [0.5, 0.0], "epsilon": 0.1, "clip": [-1, 1], "true_label": 0})");
    RunResult r = run_cli("verify --network " + net + " --property " + prop + " --out /tmp/cli_run");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"outcome\": \"verified\"") != std::string::npos);
}

TEST_CASE("verify exits 1 with a witness on a falsifiable instance") {
    std::string net = write_temp("cli_net_id2.json",
        R"({"layers": [{"weights": [[1, 0], [0, 1]], "bias": [0, 0]}]})");
    std::string prop = write_temp("cli_prop_adv.json",
        R"({"center": [0.1, 0.0], "epsilon": 0.5, "true_label": 0})");
    RunResult r = run_cli("verify --network " + net + " --property " + prop + " --out /tmp/cli_run");
    CHECK(r.exit_code == 1);
    CHECK(r.out.find("witness") != std::string::npos);
}

TEST_CASE("malformed network file exits 3") {
    std::string net = write_temp("cli_bad.json", "{ nope");
    std::string prop = write_temp("cli_prop.json",
        R"({"center": [0.5, 0.0], "epsilon": 0.1, "clip": [-1, 1], "true_label": 0})");
    RunResult r = run_cli("verify --network " + net + " --property " + prop);
    CHECK(r.exit_code == 3);
}

TEST_CASE("missing required inputs exit 3") {
    RunResult r = run_cli("verify");
    CHECK(r.exit_code == 3);
}

TEST_CASE("bounds in box mode reproduces the known CSV rows") {
    std::string net = write_temp("cli_net.json", kNet);
    std::string prop = write_temp("cli_prop_box.json",
        R"({"center": [0.0, 0.0], "epsilon": 1.0, "true_label": 0})");
    RunResult r = run_cli("bounds --network " + net + " --property " + prop +
                          " --method box --out /tmp/cli_box");
    REQUIRE(r.exit_code == 0);
    std::string csv = slurp("/tmp/cli_box/bounds.csv");
    CHECK(csv.find("1,0,-2,2,unstable") != std::string::npos);
    CHECK(csv.find("2,0,0,6,stable_pos") != std::string::npos);
    CHECK(csv.find("2,1,0,2,stable_pos") != std::string::npos);
}

TEST_CASE("bounds CSVs are containment-ordered across methods") {
    std::string net = write_temp("cli_net.json", kNet);
    std::string prop = write_temp("cli_prop_box.json",
        R"({"center": [0.0, 0.0], "epsilon": 1.0, "true_label": 0})");
    REQUIRE(run_cli("bounds --network " + net + " --property " + prop +
                    " --method box --out /tmp/cli_m_box").exit_code == 0);
    REQUIRE(run_cli("bounds --network " + net + " --property " + prop +
                    " --method lp --out /tmp/cli_m_lp").exit_code == 0);
    REQUIRE(run_cli("bounds --network " + net + " --property " + prop +
                    " --method pmilp --mip-gap 0 --out /tmp/cli_m_pm").exit_code == 0);

    auto parse = [](const std::string& path) {
        std::ifstream f(path);
        std::string line;
        std::getline(f, line); // header
        std::vector<std::pair<double, double>> rows;
        while (std::getline(f, line)) {
            std::stringstream ss(line);
            std::string cell;
            std::getline(ss, cell, ',');
            std::getline(ss, cell, ',');
            std::getline(ss, cell, ',');
            double lb = std::stod(cell);
            std::getline(ss, cell, ',');
            double ub = std::stod(cell);
            rows.emplace_back(lb, ub);
        }
        return rows;
    };
    auto box = parse("/tmp/cli_m_box/bounds.csv");
    auto lp = parse("/tmp/cli_m_lp/bounds.csv");
    auto pm = parse("/tmp/cli_m_pm/bounds.csv");
    REQUIRE(box.size() == lp.size());
    REQUIRE(lp.size() == pm.size());
    for (std::size_t i = 0; i < box.size(); ++i) {
        CHECK(box[i].first <= lp[i].first + 1e-6);
        CHECK(lp[i].first <= pm[i].first + 1e-6);
        CHECK(pm[i].second <= lp[i].second + 1e-6);
        CHECK(lp[i].second <= box[i].second + 1e-6);
    }
}

TEST_CASE("compare emits one identical row per scorer at K = 0") {
    std::string net = write_temp("cli_net.json", kNet);
    std::string prop = write_temp("cli_prop_box.json",
        R"({"center": [0.0, 0.0], "epsilon": 1.0, "true_label": 0})");
    RunResult r = run_cli("compare --network " + net + " --property " + prop +
                          " --ks 0 --scorers sas huang --out /tmp/cli_cmp");
    REQUIRE(r.exit_code == 0);
    std::string csv = slurp("/tmp/cli_cmp/curve.csv");
    std::stringstream ss(csv);
    std::string header, row_sas, row_huang;
    std::getline(ss, header);
    std::getline(ss, row_sas);
    std::getline(ss, row_huang);
    CHECK(row_sas.substr(row_sas.find(',')) == row_huang.substr(row_huang.find(',')));
    CHECK(slurp("/tmp/cli_cmp/curve_timing.csv").find("wall_ms") != std::string::npos);
}

TEST_CASE("same seed and config give byte-identical CSV bodies") {
    std::string net = write_temp("cli_net.json", kNet);
    std::string prop = write_temp("cli_prop_box.json",
        R"({"center": [0.0, 0.0], "epsilon": 1.0, "true_label": 0})");
    std::string args = "compare --network " + net + " --property " + prop +
                       " --ks 0 1 2 --scorers random sas --seed 42 --out ";
    REQUIRE(run_cli(args + "/tmp/cli_d1").exit_code == 0);
    REQUIRE(run_cli(args + "/tmp/cli_d2").exit_code == 0);
    CHECK(slurp("/tmp/cli_d1/curve.csv") == slurp("/tmp/cli_d2/curve.csv"));
    REQUIRE(!slurp("/tmp/cli_d1/curve.csv").empty());
}

TEST_CASE("config file values are used and flags override them") {
    std::string net = write_temp("cli_net.json", kNet);
    std::string prop = write_temp("cli_prop_box.json",
        R"({"center": [0.0, 0.0], "epsilon": 1.0, "true_label": 0})");
    std::string cfg = write_temp("cli_cfg.json", std::string(R"({
        "network": ")") + net + R"(",
        "property": ")" + prop + R"(",
        "method": "box",
        "out": "/tmp/cli_cfg_out"
    })");
    RunResult r = run_cli("bounds --config " + cfg);
    REQUIRE(r.exit_code == 0);
    std::string csv = slurp("/tmp/cli_cfg_out/bounds.csv");
    CHECK(csv.find("1,0,-2,2") != std::string::npos);

    // flag overrides the file's out dir
    RunResult r2 = run_cli("bounds --config " + cfg + " --out /tmp/cli_cfg_out2");
    REQUIRE(r2.exit_code == 0);
    CHECK(!slurp("/tmp/cli_cfg_out2/bounds.csv").empty());
}

TEST_CASE("oracle guard exceeded exits 4") {
    // 26 always-unstable neurons (zero bias, symmetric box)
    std::ostringstream netj;
    netj << R"({"layers": [{"weights": [)";
    for (int i = 0; i < 26; ++i)
        netj << (i ? "," : "") << "[1, " << (i % 2 ? 1 : -1) << "]";
    netj << R"(], "bias": [)";
    for (int i = 0; i < 26; ++i)
        netj << (i ? "," : "") << "0";
    netj << R"(]}, {"weights": [[)";
    for (int i = 0; i < 26; ++i)
        netj << (i ? "," : "") << "1";
    netj << R"(]], "bias": [0]}, {"weights": [[1]], "bias": [0]}]})";
    std::string net = write_temp("cli_wide.json", netj.str());
    std::string prop = write_temp("cli_prop_w.json",
        R"({"center": [0.1, 0.0], "epsilon": 1.0, "true_label": 0})");
    RunResult r = run_cli("oracle --network " + net + " --property " + prop);
    CHECK(r.exit_code == 4);
}

TEST_CASE("attack witness file round-trips through the forward check") {
    std::string net = write_temp("cli_net_id2.json",
        R"({"layers": [{"weights": [[1, 0], [0, 1]], "bias": [0, 0]}]})");
    std::string prop = write_temp("cli_prop_adv2.json",
        R"({"center": [0.1, 0.0], "epsilon": 0.5, "true_label": 0})");
    RunResult r = run_cli("attack --network " + net + " --property " + prop + " --out /tmp/cli_atk");
    CHECK(r.exit_code == 1); // found
    std::string j = slurp("/tmp/cli_atk/attack.json");
    CHECK(j.find("\"found\": true") != std::string::npos);
    CHECK(j.find("\"adversary_label\": 1") != std::string::npos); // re-checked label differs from 0
}

TEST_CASE("eps-search reports certified below falsified") {
    std::string net = write_temp("cli_net_id.json",
        R"({"layers": [{"weights": [[1, 0], [0, 1]], "bias": [0, 0]}]})");
    std::string prop = write_temp("cli_prop_id.json",
        R"({"center": [1.0, 0.0], "epsilon": 0, "true_label": 0})");
    RunResult r = run_cli("eps-search --network " + net + " --property " + prop +
                          " --eps-hi 2.0 --iters 10 --out /tmp/cli_eps");
    REQUIRE(r.exit_code == 0);
    std::string j = slurp("/tmp/cli_eps/eps_search.json");
    auto get = [&](const std::string& key) {
        auto pos = j.find(key);
        REQUIRE(pos != std::string::npos);
        return std::stod(j.substr(pos + key.size() + 2));
    };
    double cert = get("\"certified_eps\"");
    double fals = get("\"falsified_eps\"");
    CHECK(cert < fals);
    CHECK(cert <= 0.5 + 1e-9);   // analytic radius of the identity pair
    CHECK(fals >= 0.5 - 1e-9);
}

TEST_CASE("version flag prints the artifact version") {
    RunResult r = run_cli("--version");
    CHECK(r.out.find("0.1.0") != std::string::npos);
}

} // TEST_SUITE
