// Command-line front end: run, solve, bench, validate, plot.
//
// Exit codes: 0 success, 1 I/O or unexpected error, 2 validation error,
// 3 convergence error.

#include "prl/exact_solver.hpp"
#include "prl/harness.hpp"
#include "prl/io.hpp"
#include "prl/version.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failure = 1;
constexpr int exit_validation = 2;
constexpr int exit_convergence = 3;

struct Overrides {
    std::string config;
    std::string bench;
    std::optional<std::size_t> N;
    std::optional<double> vp;
    std::optional<std::int64_t> T;
    std::optional<double> delta;
    std::optional<double> tau;
    std::optional<std::size_t> runs;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> agents;
    std::optional<std::size_t> window;
    std::optional<double> eta;
    std::optional<unsigned> threads;
};

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("prl");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    const char* level = std::getenv("PRL_LOG");
    const std::string lv = level ? level : "info";
    if (lv == "error")
        spdlog::set_level(spdlog::level::err);
    else if (lv == "debug")
        spdlog::set_level(spdlog::level::debug);
    else
        spdlog::set_level(spdlog::level::info);
}

/// Config JSON after applying command-line overrides; parsed by the same
/// strict loader as config files.
nlohmann::json resolve_config_json(const Overrides& o) {
    nlohmann::json j = o.config.empty() ? nlohmann::json{{"bench", {{"name", "cosine"}, {"N", 5}}}}
                                        : prl::read_json_file(o.config);
    if (!j.is_object()) throw prl::ValidationError("", "config must be a JSON object");
    if (!o.bench.empty()) {
        if (o.bench != "cosine") throw prl::ValidationError("--bench", "only \"cosine\" is available");
        if (!j.contains("bench")) {
            for (const auto& k : prl::spec_keys) j.erase(k);
            j["bench"] = {{"name", "cosine"}, {"N", 5}};
        }
    }
    if (o.N || o.vp) {
        if (!j.contains("bench")) throw prl::ValidationError("--N", "only applies to benchmark environments");
        if (o.N) j["bench"]["N"] = *o.N;
        if (o.vp) j["bench"]["vp"] = *o.vp;
    }
    if (o.T) j["T"] = *o.T;
    if (o.delta) j["delta"] = *o.delta;
    if (o.tau) j["tau"] = *o.tau;
    if (o.runs) j["runs"] = *o.runs;
    if (o.seed) j["seed"] = *o.seed;
    if (o.threads) j["threads"] = *o.threads;
    if (o.agents) {
        nlohmann::json list = nlohmann::json::array();
        std::stringstream ss(*o.agents);
        for (std::string name; std::getline(ss, name, ',');)
            if (!name.empty()) list.push_back(name);
        j["agents"] = list;
    }
    if (o.window || o.eta) {
        if (!j.contains("agents")) j["agents"] = {"pucrl2", "ucrl2", "swucrl2"};
        for (auto& a : j["agents"]) {
            if (a.is_string()) a = nlohmann::json{{"name", a}};
            if (a.value("name", "") != "swucrl2") continue;
            if (o.window) a["window"] = *o.window;
            if (o.eta) a["eta"] = *o.eta;
        }
    }
    return j;
}

void add_env_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "experiment/model config JSON");
    cmd->add_option("--bench", o.bench, "built-in benchmark environment (cosine)");
    cmd->add_option("--N", o.N, "benchmark period");
    cmd->add_option("--vp", o.vp, "benchmark switching-frequency parameter");
    cmd->add_option("--tau", o.tau, "aperiodicity transform weight in (0,1)");
}

void add_experiment_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--T", o.T, "horizon");
    cmd->add_option("--delta", o.delta, "confidence parameter");
    cmd->add_option("--runs", o.runs, "independent runs per agent");
    cmd->add_option("--seed", o.seed, "base seed (run i uses seed + i)");
    cmd->add_option("--agents", o.agents, "comma-separated list of pucrl2,ucrl2,swucrl2");
    cmd->add_option("--window", o.window, "sliding window for swucrl2");
    cmd->add_option("--eta", o.eta, "confidence widening for swucrl2");
    cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

int cmd_run(const Overrides& o, const std::string& out_dir) {
    const auto cfg = prl::config_from_json(resolve_config_json(o));
    spdlog::info("running {} agent(s) x {} run(s), T={}", cfg.agents.size(), cfg.runs, cfg.horizon);
    const auto result = prl::run_experiment(cfg);
    spdlog::info("rho* = {:.6f}, diameter = {:.4f}", result.optimum.gain, result.diameter.value);

    std::filesystem::create_directories(out_dir);
    const auto steps_path = (std::filesystem::path(out_dir) / "steps.csv").string();
    {
        std::ofstream csv(steps_path, std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write " + steps_path);
        prl::write_steps_csv(csv, result.runs);
    }
    const auto summary = prl::summary_json(result);
    prl::write_text_file((std::filesystem::path(out_dir) / "summary.json").string(), summary.dump(2) + "\n");

    for (const auto& a : result.agents)
        spdlog::info("{}: cumulative reward {:.2f} +- {:.2f}, regret {:.2f}", a.name, a.final_cumulative_reward.mean,
                     a.final_cumulative_reward.stddev, a.final_regret.mean);

    bool convergence_failure = false;
    for (const auto& r : result.runs) {
        if (!r.failed) continue;
        spdlog::error("{} run {} failed: {}", r.agent, r.run, r.error);
        convergence_failure = true;
    }
    return convergence_failure ? exit_convergence : exit_ok;
}

int cmd_solve(const Overrides& o) {
    auto j = resolve_config_json(o);
    const auto cfg = prl::config_from_json(j);
    const prl::AmdpModel model(cfg.spec);
    const auto gain = prl::optimal_gain(model, cfg.tau, 1e-8);
    const auto diam = prl::diameter(model);
    nlohmann::json out{{"rho_star", gain.gain},
                       {"diameter", diam.finite() ? nlohmann::json(diam.value) : nlohmann::json(nullptr)},
                       {"iterations", gain.iterations},
                       {"tau", cfg.tau},
                       {"version", prl::version}};
    std::cout << out.dump(2) << '\n';
    return exit_ok;
}

int cmd_bench(const Overrides& o, const std::string& noise, const std::string& out_path) {
    const std::size_t N = o.N.value_or(5);
    const double vp = o.vp.value_or(0.4);
    const auto spec = prl::spec_from_bench(prl::bench_json(N, vp, noise == "deterministic" ? prl::RewardNoise::deterministic
                                                                                           : prl::RewardNoise::bernoulli));
    const std::string text = prl::spec_to_json(spec).dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        prl::write_text_file(out_path, text);
    return exit_ok;
}

int cmd_validate(const Overrides& o) {
    const auto cfg = prl::config_from_json(resolve_config_json(o));
    std::cout << nlohmann::json{{"valid", true}, {"config", prl::config_to_json(cfg)}}.dump(2) << '\n';
    return exit_ok;
}

int cmd_plot(const std::string& steps_path, const std::string& summary_path, const std::string& out_path) {
    std::ifstream in(steps_path, std::ios::binary);
    if (!in) throw prl::ValidationError(steps_path, "cannot open steps CSV");
    const auto curves = prl::curves_from_csv(in);
    nlohmann::json meta{{"version", prl::version}, {"source", steps_path}};
    if (!summary_path.empty()) meta["config"] = prl::read_json_file(summary_path).value("config", nlohmann::json());
    prl::write_text_file(out_path, prl::render_svg(curves, meta));
    spdlog::info("wrote {} ({} agents)", out_path, curves.agents.size());
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Online reinforcement learning for periodic MDPs"};
    app.set_version_flag("--version", std::string(prl::version));
    app.require_subcommand(1);

    Overrides o;
    std::string out_dir = "out";
    auto* run = app.add_subcommand("run", "simulate agents and write steps.csv + summary.json");
    add_env_options(run, o);
    add_experiment_options(run, o);
    run->add_option("--out", out_dir, "output directory");

    auto* solve = app.add_subcommand("solve", "print optimal gain and diameter of the environment");
    add_env_options(solve, o);

    std::string noise = "bernoulli", bench_out;
    auto* bench = app.add_subcommand("bench", "emit the cosine benchmark model as JSON");
    bench->add_option("--N", o.N, "period");
    bench->add_option("--vp", o.vp, "switching-frequency parameter");
    bench->add_option("--noise", noise, "bernoulli or deterministic")->check(CLI::IsMember({"bernoulli", "deterministic"}));
    bench->add_option("--out", bench_out, "output file (default stdout)");

    auto* validate = app.add_subcommand("validate", "check a config without running it");
    add_env_options(validate, o);
    add_experiment_options(validate, o);

    std::string steps_path = "out/steps.csv", summary_path, svg_path = "out/plot.svg";
    auto* plot = app.add_subcommand("plot", "render mean cumulative reward per agent as SVG");
    plot->add_option("--steps", steps_path, "steps.csv path");
    plot->add_option("--summary", summary_path, "summary.json whose config is embedded in the SVG");
    plot->add_option("--out", svg_path, "output SVG path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_validation;
    }

    try {
        if (*run) return cmd_run(o, out_dir);
        if (*solve) return cmd_solve(o);
        if (*bench) return cmd_bench(o, noise, bench_out);
        if (*validate) return cmd_validate(o);
        if (*plot) return cmd_plot(steps_path, summary_path, svg_path);
    } catch (const prl::ValidationError& e) {
        spdlog::error("validation error: {}", e.what());
        return exit_validation;
    } catch (const prl::ConvergenceError& e) {
        spdlog::error("convergence error: {}", e.what());
        return exit_convergence;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return exit_failure;
    }
    return exit_failure;
}
