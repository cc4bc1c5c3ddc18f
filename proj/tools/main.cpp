#include "relucert/bounds.hpp"
#include "relucert/network.hpp"
#include "relucert/oracle.hpp"
#include "relucert/pipeline.hpp"
#include "relucert/propagate.hpp"
#include "relucert/version.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace relucert;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitVerified = 0;
constexpr int kExitFalsified = 1;
constexpr int kExitUndecided = 2;
constexpr int kExitUsage = 3;
constexpr int kExitGuard = 4;
constexpr int kExitFailure = 5;

struct RunConfig {
    std::string network_path;
    std::string property_path;
    std::string method = "pmilp";
    std::string scorer = "sas";
    std::vector<int> schedule;
    std::optional<int> k;
    int extra = 3;
    double threshold = 0.01;
    double mip_gap = 0.001;
    double timeout_s = 60.0;
    int workers = 0;
    std::uint64_t seed = 1;
    std::string out_dir = ".";

    // compare
    std::vector<std::string> scorers = {"sas", "gs_fsb", "huang", "random"};
    std::vector<int> ks = {0, 4, 8, 12};
    int layer = 0;

    // attack / eps-search
    int attack_steps = 100;
    int attack_restarts = 10;
    double eps_hi = 0.0;
    int iters = 10;
};

Method parse_method(const std::string& s) {
    if (s == "box") return Method::Box;
    if (s == "lp") return Method::Lp;
    if (s == "pmilp") return Method::Pmilp;
    if (s == "fullmilp") return Method::FullMilp;
    throw Error("unknown method '" + s + "' (box|lp|pmilp|fullmilp)");
}

ScoreMethod parse_scorer(const std::string& s) {
    if (s == "sas") return ScoreMethod::Sas;
    if (s == "gs_sr") return ScoreMethod::GsSr;
    if (s == "gs_fsb") return ScoreMethod::GsFsb;
    if (s == "huang") return ScoreMethod::Huang;
    if (s == "random") return ScoreMethod::Random;
    throw Error("unknown scorer '" + s + "' (sas|gs_sr|gs_fsb|huang|random)");
}

void merge_config_file(RunConfig& rc, const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open config " + path);
    json j;
    in >> j;
    if (j.contains("network")) rc.network_path = j["network"].get<std::string>();
    if (j.contains("property")) rc.property_path = j["property"].get<std::string>();
    if (j.contains("method")) rc.method = j["method"].get<std::string>();
    if (j.contains("scorer")) rc.scorer = j["scorer"].get<std::string>();
    if (j.contains("schedule")) rc.schedule = j["schedule"].get<std::vector<int>>();
    if (j.contains("k")) rc.k = j["k"].get<int>();
    if (j.contains("extra")) rc.extra = j["extra"].get<int>();
    if (j.contains("threshold")) rc.threshold = j["threshold"].get<double>();
    if (j.contains("mip_gap")) rc.mip_gap = j["mip_gap"].get<double>();
    if (j.contains("timeout")) rc.timeout_s = j["timeout"].get<double>();
    if (j.contains("workers")) rc.workers = j["workers"].get<int>();
    if (j.contains("seed")) rc.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out")) rc.out_dir = j["out"].get<std::string>();
    if (j.contains("scorers")) rc.scorers = j["scorers"].get<std::vector<std::string>>();
    if (j.contains("ks")) rc.ks = j["ks"].get<std::vector<int>>();
    if (j.contains("layer")) rc.layer = j["layer"].get<int>();
    if (j.contains("attack_steps")) rc.attack_steps = j["attack_steps"].get<int>();
    if (j.contains("attack_restarts")) rc.attack_restarts = j["attack_restarts"].get<int>();
    if (j.contains("eps_hi")) rc.eps_hi = j["eps_hi"].get<double>();
    if (j.contains("iters")) rc.iters = j["iters"].get<int>();
}

json config_echo(const RunConfig& rc) {
    json j;
    j["network"] = rc.network_path;
    j["property"] = rc.property_path;
    j["method"] = rc.method;
    j["scorer"] = rc.scorer;
    j["schedule"] = rc.schedule;
    if (rc.k)
        j["k"] = *rc.k;
    j["extra"] = rc.extra;
    j["threshold"] = rc.threshold;
    j["mip_gap"] = rc.mip_gap;
    j["timeout"] = rc.timeout_s;
    j["workers"] = rc.workers;
    j["seed"] = rc.seed;
    j["version"] = kVersion;
    return j;
}

PropagationConfig to_prop_config(const RunConfig& rc) {
    PropagationConfig cfg;
    cfg.method = parse_method(rc.method);
    cfg.scorer = parse_scorer(rc.scorer);
    cfg.schedule = rc.schedule;
    if (rc.k)
        cfg.schedule = {*rc.k};
    cfg.extra = rc.extra;
    cfg.threshold = rc.threshold;
    cfg.mip_gap = rc.mip_gap;
    cfg.timeout_s = rc.timeout_s;
    cfg.workers = rc.workers;
    cfg.seed = rc.seed;
    return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path.string());
    out << content;
}

void write_manifest(const RunConfig& rc, const std::string& command, const json& timings) {
    json j;
    j["command"] = command;
    j["config"] = config_echo(rc);
    j["timings_ms"] = timings;
    write_file(fs::path(rc.out_dir) / (command + "_manifest.json"), j.dump(2) + "\n");
}

std::pair<Network, std::pair<InputRegion, RobustnessProperty>> load_inputs(const RunConfig& rc) {
    if (rc.network_path.empty() || rc.property_path.empty())
        throw Error("both --network and --property are required (flag or config file)");
    Network net = load_network(rc.network_path);
    auto prop = load_property(rc.property_path);
    if (static_cast<int>(prop.first.center.size()) != net.input_dim())
        throw Error("property center dimension does not match the network input");
    if (prop.second.true_label >= net.output_dim())
        throw Error("true_label out of range for the network output");
    return {std::move(net), std::move(prop)};
}

int cmd_verify(const RunConfig& rc) {
    auto [net, rp] = load_inputs(rc);
    auto& [region, prop] = rp;
    VerifyConfig vcfg;
    vcfg.prop = to_prop_config(rc);
    vcfg.attack.steps = rc.attack_steps;
    vcfg.attack.restarts = rc.attack_restarts;
    vcfg.attack.seed = rc.seed;

    Verdict v = verify(net, region, prop, vcfg);

    json j;
    j["outcome"] = to_string(v.outcome);
    j["distance_to_verify"] = v.distance_to_verify;
    json margins = json::object();
    for (const auto& [adv, ub] : v.margins)
        margins[std::to_string(adv)] = ub;
    j["margins"] = margins;
    if (v.witness)
        j["witness"] = *v.witness;
    j["timings_ms"] = {{"attack", v.attack_ms}, {"lp_stage", v.lp_stage_ms}, {"pmilp_stage", v.pmilp_stage_ms}};
    j["config"] = config_echo(rc);
    write_file(fs::path(rc.out_dir) / "verdict.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << std::endl;

    switch (v.outcome) {
    case Outcome::Verified: return kExitVerified;
    case Outcome::Falsified: return kExitFalsified;
    case Outcome::Undecided: return kExitUndecided;
    }
    return kExitFailure;
}

int cmd_bounds(const RunConfig& rc) {
    auto [net, rp] = load_inputs(rc);
    auto& region = rp.first;
    auto t0 = std::chrono::steady_clock::now();
    BoundsMap bm = pmilp_bounds(net, region, to_prop_config(rc));
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    write_file(fs::path(rc.out_dir) / "bounds.csv", bounds_to_csv(bm));
    write_manifest(rc, "bounds", json{{"total", ms}});
    std::cout << "bounds written to " << (fs::path(rc.out_dir) / "bounds.csv").string() << "\n";
    return 0;
}

int cmd_compare(const RunConfig& rc) {
    auto [net, rp] = load_inputs(rc);
    auto& region = rp.first;
    int layer = rc.layer > 0 ? rc.layer : std::max(2, net.num_layers() - 1);
    std::vector<ScoreMethod> scorers;
    for (const auto& s : rc.scorers)
        scorers.push_back(parse_scorer(s));
    auto t0 = std::chrono::steady_clock::now();
    auto rows = uncertainty_curve(net, region, layer, scorers, rc.ks, to_prop_config(rc));
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    write_file(fs::path(rc.out_dir) / "curve.csv", curve_to_csv(rows));
    write_file(fs::path(rc.out_dir) / "curve_timing.csv", curve_timing_to_csv(rows));
    write_manifest(rc, "compare", json{{"total", ms}});
    std::cout << curve_to_csv(rows);
    return 0;
}

int cmd_oracle(const RunConfig& rc) {
    auto [net, rp] = load_inputs(rc);
    auto& [region, prop] = rp;
    oracle::ExactVerdict v = oracle::exact_verify(net, region, prop, rc.workers);
    json j;
    j["outcome"] = v.robust ? "robust" : "not_robust";
    j["worst_margin"] = v.worst_margin;
    if (v.witness)
        j["witness"] = *v.witness;
    j["config"] = config_echo(rc);
    write_file(fs::path(rc.out_dir) / "oracle.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << std::endl;
    return v.robust ? 0 : 1;
}

int cmd_attack(const RunConfig& rc) {
    auto [net, rp] = load_inputs(rc);
    auto& [region, prop] = rp;
    AttackConfig acfg;
    acfg.steps = rc.attack_steps;
    acfg.restarts = rc.attack_restarts;
    acfg.seed = rc.seed;
    auto w = attack(net, region, prop, acfg);
    json j;
    j["found"] = w.has_value();
    if (w) {
        j["witness"] = *w;
        Vec out = forward(net, *w).output();
        j["adversary_label"] = argmax(out);
    }
    j["config"] = config_echo(rc);
    write_file(fs::path(rc.out_dir) / "attack.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << std::endl;
    return w ? 1 : 0;
}

int cmd_eps_search(const RunConfig& rc) {
    auto [net, rp] = load_inputs(rc);
    auto& [region, prop] = rp;
    if (rc.eps_hi <= 0.0)
        throw Error("--eps-hi must be positive");
    VerifyConfig vcfg;
    vcfg.prop = to_prop_config(rc);
    vcfg.attack.seed = rc.seed;
    auto res = epsilon_search(net, region.center, region.clip_lo, region.clip_hi, prop, vcfg,
                              rc.eps_hi, rc.iters);
    json j;
    if (res.certified_eps)
        j["certified_eps"] = *res.certified_eps;
    if (res.falsified_eps)
        j["falsified_eps"] = *res.falsified_eps;
    j["bracket"] = {res.lo, res.hi};
    j["config"] = config_echo(rc);
    write_file(fs::path(rc.out_dir) / "eps_search.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << std::endl;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"local robustness verifier for dense ReLU networks"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    RunConfig rc;
    std::string config_path;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file; flags override its values");
        cmd->add_option("--network", rc.network_path, "network JSON file");
        cmd->add_option("--property", rc.property_path, "property JSON file");
        cmd->add_option("--method", rc.method, "box|lp|pmilp|fullmilp");
        cmd->add_option("--scorer", rc.scorer, "sas|gs_sr|gs_fsb|huang|random");
        cmd->add_option("--schedule", rc.schedule, "per-layer k_min list, layer 2 first");
        cmd->add_option("--k", [&rc](const std::vector<std::string>& v) {
            rc.k = std::stoi(v.back());
            return true;
        }, "single k_min for every layer");
        cmd->add_option("--extra", rc.extra, "extra neurons admitted above k_min");
        cmd->add_option("--threshold", rc.threshold, "score threshold for the extras");
        cmd->add_option("--mip-gap", rc.mip_gap, "relative MIP gap");
        cmd->add_option("--timeout", rc.timeout_s, "per-call timeout in seconds");
        cmd->add_option("--workers", rc.workers, "worker threads (0 = hardware)");
        cmd->add_option("--seed", rc.seed, "seed for attack and random scorer");
        cmd->add_option("--out", rc.out_dir, "output directory for reports");
    };

    CLI::App* verify_cmd = app.add_subcommand("verify", "attack, then LP, then pMILP certification");
    add_common(verify_cmd);
    verify_cmd->add_option("--attack-steps", rc.attack_steps, "PGD steps per restart");
    verify_cmd->add_option("--attack-restarts", rc.attack_restarts, "PGD restarts");

    CLI::App* bounds_cmd = app.add_subcommand("bounds", "per-neuron certified bounds as CSV");
    add_common(bounds_cmd);

    CLI::App* compare_cmd = app.add_subcommand("compare", "uncertainty curve across scorers and K");
    add_common(compare_cmd);
    compare_cmd->add_option("--scorers", rc.scorers, "scorers to compare");
    compare_cmd->add_option("--ks", rc.ks, "open-set sizes to sweep");
    compare_cmd->add_option("--layer", rc.layer, "target layer (default: last hidden)");

    CLI::App* oracle_cmd = app.add_subcommand("oracle", "exact verdict by pattern enumeration (tiny nets)");
    add_common(oracle_cmd);

    CLI::App* attack_cmd = app.add_subcommand("attack", "projected gradient attack only");
    add_common(attack_cmd);
    attack_cmd->add_option("--attack-steps", rc.attack_steps, "PGD steps per restart");
    attack_cmd->add_option("--attack-restarts", rc.attack_restarts, "PGD restarts");

    CLI::App* eps_cmd = app.add_subcommand("eps-search", "bisect the certified epsilon");
    add_common(eps_cmd);
    eps_cmd->add_option("--eps-hi", rc.eps_hi, "upper end of the bracket")->required();
    eps_cmd->add_option("--iters", rc.iters, "bisection probes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    CLI::App* active = nullptr;
    for (CLI::App* cmd : {verify_cmd, bounds_cmd, compare_cmd, oracle_cmd, attack_cmd, eps_cmd})
        if (app.got_subcommand(cmd))
            active = cmd;

    try {
        if (!config_path.empty() && active != nullptr) {
            // File values apply wherever the command line stayed silent.
            RunConfig file_rc;
            merge_config_file(file_rc, config_path);
            auto unset = [&](const std::string& flag) {
                const CLI::Option* opt = active->get_option_no_throw(flag);
                return opt == nullptr || opt->count() == 0;
            };
            if (unset("--network")) rc.network_path = file_rc.network_path;
            if (unset("--property")) rc.property_path = file_rc.property_path;
            if (unset("--method")) rc.method = file_rc.method;
            if (unset("--scorer")) rc.scorer = file_rc.scorer;
            if (unset("--schedule")) rc.schedule = file_rc.schedule;
            if (unset("--k")) rc.k = file_rc.k;
            if (unset("--extra")) rc.extra = file_rc.extra;
            if (unset("--threshold")) rc.threshold = file_rc.threshold;
            if (unset("--mip-gap")) rc.mip_gap = file_rc.mip_gap;
            if (unset("--timeout")) rc.timeout_s = file_rc.timeout_s;
            if (unset("--workers")) rc.workers = file_rc.workers;
            if (unset("--seed")) rc.seed = file_rc.seed;
            if (unset("--out")) rc.out_dir = file_rc.out_dir;
            if (unset("--scorers")) rc.scorers = file_rc.scorers;
            if (unset("--ks")) rc.ks = file_rc.ks;
            if (unset("--layer")) rc.layer = file_rc.layer;
            if (unset("--attack-steps")) rc.attack_steps = file_rc.attack_steps;
            if (unset("--attack-restarts")) rc.attack_restarts = file_rc.attack_restarts;
            if (unset("--eps-hi") && file_rc.eps_hi > 0.0) rc.eps_hi = file_rc.eps_hi;
            if (unset("--iters")) rc.iters = file_rc.iters;
        }
        if (app.got_subcommand(verify_cmd))
            return cmd_verify(rc);
        if (app.got_subcommand(bounds_cmd))
            return cmd_bounds(rc);
        if (app.got_subcommand(compare_cmd))
            return cmd_compare(rc);
        if (app.got_subcommand(oracle_cmd))
            return cmd_oracle(rc);
        if (app.got_subcommand(attack_cmd))
            return cmd_attack(rc);
        if (app.got_subcommand(eps_cmd))
            return cmd_eps_search(rc);
        return kExitUsage;
    } catch (const Error& e) {
        std::string msg = e.what();
        std::cerr << "error: " << msg << "\n";
        if (msg.find("oracle guard") != std::string::npos)
            return kExitGuard;
        if (msg.find("parse") != std::string::npos || msg.find("cannot open") != std::string::npos ||
            msg.find("required") != std::string::npos)
            return kExitUsage;
        return kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}
