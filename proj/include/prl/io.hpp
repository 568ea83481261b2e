#pragma once

// JSON model/config files, the per-step CSV, the summary document and the
// SVG chart.

#include "prl/harness.hpp"
#include "prl/pmdp.hpp"
#include "prl/version.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace prl {

using nlohmann::json;

namespace detail {

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& prefix) {
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw ValidationError(prefix + key, "unknown key");
}

inline const json& require(const json& j, const std::string& key, const std::string& prefix = "") {
    if (!j.contains(key)) throw ValidationError(prefix + key, "missing required field");
    return j.at(key);
}

inline std::size_t as_size(const json& j, const std::string& path, std::size_t min_value = 0) {
    if (!j.is_number_integer() || j.get<std::int64_t>() < static_cast<std::int64_t>(min_value))
        throw ValidationError(path, "expected an integer >= " + std::to_string(min_value));
    return j.get<std::size_t>();
}

inline double as_double(const json& j, const std::string& path) {
    if (!j.is_number()) throw ValidationError(path, "expected a number");
    return j.get<double>();
}

inline RewardNoise parse_noise(const json& j, const std::string& path) {
    if (j == "bernoulli") return RewardNoise::bernoulli;
    if (j == "deterministic") return RewardNoise::deterministic;
    throw ValidationError(path, "expected \"bernoulli\" or \"deterministic\"");
}

inline const json& expect_array(const json& j, std::size_t size, const std::string& path) {
    if (!j.is_array() || j.size() != size)
        throw ValidationError(path, "expected an array of length " + std::to_string(size));
    return j;
}

inline std::string idx(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

}  // namespace detail

inline const std::set<std::string> spec_keys{"S", "A", "N", "kernels", "rewards", "noise"};

/// {"S","A","N","kernels":[N][S][A][S],"rewards":[N][S][A],"noise"}.
inline json spec_to_json(const PmdpSpec& spec) {
    json kernels = json::array(), rewards = json::array();
    for (std::size_t n = 0; n < spec.period; ++n) {
        json kn = json::array(), rn = json::array();
        for (std::size_t s = 0; s < spec.n_states; ++s) {
            json ks = json::array(), rs = json::array();
            for (std::size_t a = 0; a < spec.n_actions; ++a) {
                const auto row = spec.kernel(n, s, a);
                ks.push_back(std::vector<double>(row.begin(), row.end()));
                rs.push_back(spec.reward(n, s, a));
            }
            kn.push_back(std::move(ks));
            rn.push_back(std::move(rs));
        }
        kernels.push_back(std::move(kn));
        rewards.push_back(std::move(rn));
    }
    return {{"S", spec.n_states}, {"A", spec.n_actions}, {"N", spec.period},
            {"kernels", kernels}, {"rewards", rewards}, {"noise", to_string(spec.reward_noise)}};
}

/// Parses the model keys of `j`. With `strict`, any other key is rejected.
inline PmdpSpec spec_from_json(const json& j, bool strict = true) {
    using namespace detail;
    if (!j.is_object()) throw ValidationError("", "expected a JSON object");
    if (strict) reject_unknown_keys(j, spec_keys, "");
    const std::size_t S = as_size(require(j, "S"), "S", 1);
    const std::size_t A = as_size(require(j, "A"), "A", 1);
    const std::size_t N = as_size(require(j, "N"), "N", 2);
    const RewardNoise noise = j.contains("noise") ? parse_noise(j["noise"], "noise") : RewardNoise::bernoulli;
    PmdpSpec spec(S, A, N, noise);

    const json& kernels = expect_array(require(j, "kernels"), N, "kernels");
    const json& rewards = expect_array(require(j, "rewards"), N, "rewards");
    for (std::size_t n = 0; n < N; ++n) {
        const auto kn = idx("kernels", n), rn = idx("rewards", n);
        expect_array(kernels[n], S, kn);
        expect_array(rewards[n], S, rn);
        for (std::size_t s = 0; s < S; ++s) {
            const auto ks = idx(kn, s), rs = idx(rn, s);
            expect_array(kernels[n][s], A, ks);
            expect_array(rewards[n][s], A, rs);
            for (std::size_t a = 0; a < A; ++a) {
                const auto ka = idx(ks, a);
                expect_array(kernels[n][s][a], S, ka);
                for (std::size_t s2 = 0; s2 < S; ++s2)
                    spec.kernel(n, s, a)[s2] = as_double(kernels[n][s][a][s2], idx(ka, s2));
                spec.reward(n, s, a) = as_double(rewards[n][s][a], idx(rs, a));
            }
        }
    }
    spec.validate();
    return spec;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path, std::string("malformed JSON: ") + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

/// Benchmark environment description as it appears under "bench".
inline json bench_json(std::size_t N, double v_p, RewardNoise noise) {
    return {{"name", "cosine"}, {"N", N}, {"vp", v_p}, {"noise", to_string(noise)}};
}

inline PmdpSpec spec_from_bench(const json& b) {
    using namespace detail;
    if (!b.is_object()) throw ValidationError("bench", "expected an object");
    reject_unknown_keys(b, {"name", "N", "vp", "noise"}, "bench.");
    if (b.value("name", std::string("cosine")) != "cosine") throw ValidationError("bench.name", "only \"cosine\" is available");
    const std::size_t N = as_size(require(b, "N", "bench."), "bench.N", 2);
    const double vp = b.contains("vp") ? as_double(b["vp"], "bench.vp") : 0.4;
    const RewardNoise noise = b.contains("noise") ? parse_noise(b["noise"], "bench.noise") : RewardNoise::bernoulli;
    return cosine_benchmark(N, vp, noise);
}

inline const std::set<std::string> experiment_keys{"bench", "T", "delta", "tau", "runs", "seed", "agents", "threads"};

inline std::vector<AgentSpec> parse_agents(const json& j) {
    using namespace detail;
    if (!j.is_array() || j.empty()) throw ValidationError("agents", "expected a non-empty array");
    std::vector<AgentSpec> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string path = idx("agents", i);
        AgentSpec a;
        if (j[i].is_string()) {
            a.name = j[i].get<std::string>();
        } else if (j[i].is_object()) {
            reject_unknown_keys(j[i], {"name", "window", "eta"}, path + ".");
            const json& name = require(j[i], "name", path + ".");
            if (!name.is_string()) throw ValidationError(path + ".name", "expected a string");
            a.name = name.get<std::string>();
            if (j[i].contains("window")) a.window = as_size(j[i]["window"], path + ".window", 1);
            if (j[i].contains("eta")) a.eta = as_double(j[i]["eta"], path + ".eta");
        } else {
            throw ValidationError(path, "expected an agent name or object");
        }
        out.push_back(std::move(a));
    }
    return out;
}

/// Experiment config: either the model keys inline or a "bench" object, plus
/// optional experiment fields. Unknown keys are rejected.
inline ExperimentConfig config_from_json(const json& j) {
    using namespace detail;
    if (!j.is_object()) throw ValidationError("", "expected a JSON object");
    std::set<std::string> allowed = experiment_keys;
    allowed.insert(spec_keys.begin(), spec_keys.end());
    reject_unknown_keys(j, allowed, "");

    ExperimentConfig cfg;
    if (j.contains("bench")) {
        for (const auto& k : spec_keys)
            if (j.contains(k)) throw ValidationError(k, "not allowed together with \"bench\"");
        cfg.spec = spec_from_bench(j["bench"]);
        cfg.environment = json{{"bench", j["bench"]}};
    } else {
        json model = json::object();
        for (const auto& k : spec_keys)
            if (j.contains(k)) model[k] = j[k];
        cfg.spec = spec_from_json(model);
        cfg.environment = json{{"inline", true}};
    }
    if (j.contains("T")) cfg.horizon = static_cast<std::int64_t>(as_size(j["T"], "T", 1));
    if (j.contains("delta")) cfg.delta = as_double(j["delta"], "delta");
    if (j.contains("tau")) cfg.tau = as_double(j["tau"], "tau");
    if (j.contains("runs")) cfg.runs = as_size(j["runs"], "runs", 1);
    if (j.contains("seed")) cfg.base_seed = as_size(j["seed"], "seed");
    if (j.contains("threads")) cfg.threads = static_cast<unsigned>(as_size(j["threads"], "threads"));
    if (j.contains("agents")) cfg.agents = parse_agents(j["agents"]);
    cfg.validate();
    return cfg;
}

/// Fully resolved config (agent defaults filled in); loads back to the same experiment.
inline json config_to_json(const ExperimentConfig& cfg) {
    json j = cfg.environment.contains("bench") ? json{{"bench", cfg.environment["bench"]}} : spec_to_json(cfg.spec);
    j["T"] = cfg.horizon;
    j["delta"] = cfg.delta;
    j["tau"] = cfg.tau;
    j["runs"] = cfg.runs;
    j["seed"] = cfg.base_seed;
    json agents = json::array();
    for (const auto& a : cfg.agents) {
        json aj{{"name", a.name}};
        if (a.name == "swucrl2") {
            aj["window"] = a.window.value_or(default_window(cfg.spec));
            aj["eta"] = a.eta.value_or(default_eta);
        }
        agents.push_back(std::move(aj));
    }
    j["agents"] = std::move(agents);
    return j;
}

/// Shortest round-trip decimal, independent of the global locale.
inline void append_number(std::string& out, double v) {
    std::array<char, 32> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.append(buf.data(), res.ptr);
}

inline void append_number(std::string& out, std::int64_t v) {
    std::array<char, 24> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.append(buf.data(), res.ptr);
}

inline constexpr std::string_view steps_csv_header = "t,agent,run,reward,mean_reward,episode,regret";

/// Per-step CSV in run-slot order.
inline void write_steps_csv(std::ostream& os, const std::vector<RunResult>& runs) {
    std::string line;
    os << steps_csv_header << '\n';
    for (const auto& r : runs) {
        if (r.failed) continue;
        for (std::size_t i = 0; i < r.steps.size(); ++i) {
            const auto& st = r.steps[i];
            line.clear();
            append_number(line, st.t);
            line += ',';
            line += r.agent;
            line += ',';
            append_number(line, static_cast<std::int64_t>(r.run));
            line += ',';
            append_number(line, st.reward);
            line += ',';
            append_number(line, st.mean_reward);
            line += ',';
            append_number(line, st.episode);
            line += ',';
            append_number(line, r.regret[i]);
            line += '\n';
            os << line;
        }
    }
}

inline json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.stddev}}; }

inline json summary_json(const ExperimentResult& res) {
    const auto& cfg = res.config;
    json agents = json::array();
    for (const auto& a : res.agents) {
        const auto& d = a.diagnostics;
        json diag{{"episode_bound", d.episode_bound},
                  {"max_episodes", d.max_episodes},
                  {"episodes_within_bound", d.episodes_within_bound},
                  {"audited_episodes", d.audited_episodes},
                  {"optimism_violations", d.optimism_violations},
                  {"regret_bound", d.regret_bound},
                  {"max_final_regret", d.max_final_regret},
                  {"regret_within_bound", d.regret_within_bound},
                  {"regret_slope", std::isfinite(d.regret_slope) ? json(d.regret_slope) : json(nullptr)}};
        diag["exclusion_frequency"] = d.exclusion_frequency ? json(*d.exclusion_frequency) : json(nullptr);
        agents.push_back({{"name", a.name},
                          {"metadata", a.metadata},
                          {"completed_runs", a.completed_runs},
                          {"failed_runs", a.failed_runs},
                          {"final_cumulative_reward", stat_json(a.final_cumulative_reward)},
                          {"final_regret", stat_json(a.final_regret)},
                          {"final_sampled_regret", stat_json(a.final_sampled_regret)},
                          {"episodes", stat_json(a.episodes)},
                          {"diagnostics", diag}});
    }
    json failures = json::array();
    for (const auto& r : res.runs)
        if (r.failed) failures.push_back({{"agent", r.agent}, {"run", r.run}, {"error", r.error}});

    json diam_pairs = json::array();
    for (const auto& [src, dst] : res.diameter.unreachable) diam_pairs.push_back({src, dst});

    return {{"version", version},
            {"config", config_to_json(cfg)},
            {"spec", spec_to_json(cfg.spec)},
            {"rho_star", res.optimum.gain},
            {"rho_star_iterations", res.optimum.iterations},
            {"diameter", res.diameter.finite() ? json(res.diameter.value) : json(nullptr)},
            {"diameter_unreachable", diam_pairs},
            {"variation_budget", variation_budget(cfg.spec, cfg.horizon)},
            {"agents", agents},
            {"failures", failures},
            {"omitted_baselines", {"UCRL3", "BORL"}}};
}

/// Mean cumulative sampled reward per agent, averaged over runs.
struct RewardCurves {
    std::vector<std::string> agents;              // first-appearance order
    std::vector<std::vector<double>> mean_curve;  // per agent, index t-1
    std::vector<std::size_t> run_counts;
};

/// Parses steps.csv. Throws ValidationError on malformed input or no data rows.
inline RewardCurves curves_from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != steps_csv_header)
        throw ValidationError("steps.csv", "missing or unexpected header");

    // agent -> run -> cumulative reward sequence
    std::vector<std::string> order;
    std::map<std::string, std::map<std::int64_t, std::vector<double>>> data;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::array<std::string_view, 7> fields;
        std::string_view rest(line);
        for (std::size_t i = 0; i < 7; ++i) {
            const auto comma = rest.find(',');
            if ((comma == std::string_view::npos) != (i == 6))
                throw ValidationError("steps.csv:" + std::to_string(line_no), "expected 7 fields");
            fields[i] = rest.substr(0, comma);
            if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
        }
        auto parse_int = [&](std::string_view f) {
            std::int64_t v = 0;
            const auto r = std::from_chars(f.data(), f.data() + f.size(), v);
            if (r.ec != std::errc() || r.ptr != f.data() + f.size())
                throw ValidationError("steps.csv:" + std::to_string(line_no), "bad integer '" + std::string(f) + "'");
            return v;
        };
        auto parse_real = [&](std::string_view f) {
            double v = 0.0;
            const auto r = std::from_chars(f.data(), f.data() + f.size(), v);
            if (r.ec != std::errc() || r.ptr != f.data() + f.size())
                throw ValidationError("steps.csv:" + std::to_string(line_no), "bad number '" + std::string(f) + "'");
            return v;
        };
        const std::int64_t t = parse_int(fields[0]);
        const std::string agent(fields[1]);
        const std::int64_t run = parse_int(fields[2]);
        const double reward = parse_real(fields[3]);
        parse_real(fields[4]);
        parse_int(fields[5]);
        parse_real(fields[6]);
        if (agent.empty()) throw ValidationError("steps.csv:" + std::to_string(line_no), "empty agent");

        if (!data.count(agent)) order.push_back(agent);
        auto& seq = data[agent][run];
        if (t != static_cast<std::int64_t>(seq.size()) + 1)
            throw ValidationError("steps.csv:" + std::to_string(line_no), "time steps out of order");
        seq.push_back((seq.empty() ? 0.0 : seq.back()) + reward);
    }
    if (order.empty()) throw ValidationError("steps.csv", "no runs");

    RewardCurves curves;
    for (const auto& agent : order) {
        const auto& runs = data[agent];
        std::size_t len = std::numeric_limits<std::size_t>::max();
        for (const auto& [_, seq] : runs) len = std::min(len, seq.size());
        std::vector<double> mean(len, 0.0);
        for (const auto& [_, seq] : runs)
            for (std::size_t i = 0; i < len; ++i) mean[i] += seq[i];
        for (double& v : mean) v /= static_cast<double>(runs.size());
        curves.agents.push_back(agent);
        curves.mean_curve.push_back(std::move(mean));
        curves.run_counts.push_back(runs.size());
    }
    return curves;
}

namespace detail {

inline std::string fixed(double v, int precision = 2) {
    std::array<char, 64> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, precision);
    return {buf.data(), res.ptr};
}

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

/// Single-panel line chart of mean cumulative reward vs t, one polyline per agent.
inline std::string render_svg(const RewardCurves& curves, const json& metadata = json()) {
    using detail::fixed;
    constexpr double width = 800, height = 500, left = 80, right = 160, top = 30, bottom = 60;
    constexpr std::size_t max_points = 600;
    static constexpr std::array<const char*, 6> palette{"#1f77b4", "#d62728", "#2ca02c",
                                                        "#ff7f0e", "#9467bd", "#8c564b"};
    std::size_t t_max = 1;
    double y_max = 0.0;
    for (const auto& c : curves.mean_curve) {
        t_max = std::max(t_max, c.size());
        for (double v : c) y_max = std::max(y_max, v);
    }
    if (y_max <= 0.0) y_max = 1.0;
    const double plot_w = width - left - right, plot_h = height - top - bottom;
    auto px = [&](double t) { return left + plot_w * t / static_cast<double>(t_max); };
    auto py = [&](double y) { return top + plot_h * (1.0 - y / y_max); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0) << "\" height=\""
       << fixed(height, 0) << "\" viewBox=\"0 0 " << fixed(width, 0) << ' ' << fixed(height, 0) << "\">\n";
    if (!metadata.is_null()) os << "<metadata>" << detail::xml_escape(metadata.dump()) << "</metadata>\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << fixed(width, 0) << "\" height=\"" << fixed(height, 0)
       << "\" fill=\"white\"/>\n";
    os << "<g stroke=\"black\" stroke-width=\"1\">\n"
       << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(top + plot_h) << "\" x2=\"" << fixed(left + plot_w)
       << "\" y2=\"" << fixed(top + plot_h) << "\"/>\n"
       << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(top) << "\" x2=\"" << fixed(left) << "\" y2=\""
       << fixed(top + plot_h) << "\"/>\n</g>\n";

    os << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (int i = 0; i <= 5; ++i) {
        const double t = static_cast<double>(t_max) * i / 5.0;
        const double y = y_max * i / 5.0;
        os << "<text x=\"" << fixed(px(t)) << "\" y=\"" << fixed(top + plot_h + 18)
           << "\" text-anchor=\"middle\">" << fixed(t, 0) << "</text>\n";
        os << "<text x=\"" << fixed(left - 8) << "\" y=\"" << fixed(py(y) + 4) << "\" text-anchor=\"end\">"
           << fixed(y, 0) << "</text>\n";
    }
    os << "<text x=\"" << fixed(left + plot_w / 2) << "\" y=\"" << fixed(height - 15)
       << "\" text-anchor=\"middle\">time step t</text>\n";
    os << "<text x=\"20\" y=\"" << fixed(top + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
       << fixed(top + plot_h / 2) << ")\">mean cumulative reward</text>\n</g>\n";

    for (std::size_t k = 0; k < curves.agents.size(); ++k) {
        const auto& c = curves.mean_curve[k];
        const char* color = palette[k % palette.size()];
        const std::size_t stride = std::max<std::size_t>(1, (c.size() + max_points - 1) / max_points);
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < c.size(); i += stride) {
            if (i) os << ' ';
            os << fixed(px(static_cast<double>(i + 1))) << ',' << fixed(py(c[i]));
        }
        if (!c.empty() && (c.size() - 1) % stride != 0)
            os << ' ' << fixed(px(static_cast<double>(c.size()))) << ',' << fixed(py(c.back()));
        os << "\"/>\n";
        const double ly = top + 20.0 * static_cast<double>(k + 1);
        os << "<line x1=\"" << fixed(left + plot_w + 15) << "\" y1=\"" << fixed(ly) << "\" x2=\""
           << fixed(left + plot_w + 40) << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << fixed(left + plot_w + 45) << "\" y=\"" << fixed(ly + 4)
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << detail::xml_escape(curves.agents[k]) << " ("
           << curves.run_counts[k] << " runs)</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace prl
