// ccl: simulate / discover / control command-line driver.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "ccl/config.hpp"
#include "ccl/error.hpp"
#include "ccl/experiment.hpp"
#include "ccl/graph.hpp"
#include "ccl/io.hpp"
#include "ccl/odiscovery.hpp"

namespace fs = std::filesystem;
using namespace ccl;
using json = nlohmann::ordered_json;

namespace {

struct Resolved {
    experiment::EpisodeConfig cfg;
    config::RunSettings run;
    json overrides = json::array();
};

void record(Resolved& r, const std::string& key, const std::string& value, const std::string& source) {
    r.overrides.push_back({{"key", key}, {"value", value}, {"source", source}});
}

std::pair<std::string, std::string> split_override(const std::string& s) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(s, "--set expects key=value, got '" + s + "'");
    return {s.substr(0, eq), s.substr(eq + 1)};
}

Resolved resolve(const std::string& config_path, const std::vector<std::string>& sets, std::optional<std::uint64_t> seed,
                 std::optional<int> jobs) {
    Resolved r;
    if (const char* env = std::getenv("CCL_SEED")) {
        config::apply(r.cfg, "seed", env);
        record(r, "seed", env, "env:CCL_SEED");
    }
    if (!config_path.empty()) {
        const auto kv = config::parse(io::read_file(config_path));
        config::apply_all(r.cfg, r.run, kv);
    }
    for (const auto& s : sets) {
        const auto [k, v] = split_override(s);
        config::apply_all(r.cfg, r.run, {{k, v}});
        record(r, k, v, "--set");
    }
    if (seed) {
        r.cfg.seed = *seed;
        record(r, "seed", std::to_string(*seed), "--seed");
    }
    if (jobs) {
        if (*jobs < 1) throw ConfigError("jobs", "jobs: must be >= 1");
        r.run.jobs = *jobs;
        record(r, "jobs", std::to_string(*jobs), "--jobs");
    }
    r.cfg.validate();
    return r;
}

json config_json(const Resolved& r) {
    json c = json::object();
    for (const auto& [k, v] : config::snapshot(r.cfg, r.run)) c[k] = v;
    return c;
}

struct Artifacts {
    fs::path dir;
    json list = json::array();
    void write(const std::string& name, const std::string& content) {
        io::write_file(dir / name, content);
        list.push_back({{"path", name}, {"sha256", io::sha256_hex(content)}});
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string episode_name(std::size_t l) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "episode_%04zu.csv", l);
    return buf;
}

void run_command(const Resolved& r, const fs::path& out, json& manifest) {
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(out);
    const auto seeds = experiment::episode_seeds(r.cfg.seed, r.run.episodes);
    const auto results = experiment::run_batch(r.cfg, seeds, r.run.jobs);
    const double t_episodes = seconds_since(t0);
    Artifacts art{out};
    for (std::size_t l = 0; l < results.size(); ++l) art.write(episode_name(l), io::episode_csv(results[l]));
    art.write("aggregate.csv", io::aggregate_csv(experiment::aggregate(results)));
    manifest["seeds"] = seeds;
    manifest["artifacts"] = art.list;
    manifest["wall_clock_seconds"] = {{"episodes", t_episodes}, {"total", seconds_since(t0)}};
}

void sweep_command(const Resolved& r, const std::string& param, const std::vector<std::string>& values,
                   std::size_t episodes, const fs::path& out, json& manifest) {
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(out);
    const auto rows = experiment::sweep(r.cfg, param, values, episodes, r.run.jobs);
    const double t_episodes = seconds_since(t0);
    Artifacts art{out};
    art.write("sweep.csv", io::sweep_csv(rows));
    art.write("boxplot.csv", io::boxplot_csv(rows));
    manifest["sweep"] = {{"param", param}, {"values", values}, {"episodes", episodes}};
    manifest["seeds"] = experiment::episode_seeds(r.cfg.seed, episodes);
    manifest["artifacts"] = art.list;
    manifest["wall_clock_seconds"] = {{"episodes", t_episodes}, {"total", seconds_since(t0)}};
}

json new_manifest(const std::string& command, const Resolved& r) {
    json m;
    m["command"] = command;
    m["config"] = config_json(r);
    m["overrides"] = r.overrides;
    return m;
}

std::vector<std::string> split_values(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    if (!cur.empty() || !out.empty()) out.push_back(cur);
    return out;
}

int discover_command(const std::string& data_path, const std::string& constraints_path, const std::string& out_path,
                     std::string constraints_out, const std::string& config_path) {
    experiment::EpisodeConfig cfg;
    if (!config_path.empty()) {
        config::RunSettings run;
        config::apply_all(cfg, run, config::parse(io::read_file(config_path)));
        cfg.validate();
    }
    const Series data = io::parse_series_csv(io::read_file(data_path));
    idisc::ConstraintList constraints;
    if (!constraints_path.empty()) {
        constraints = io::parse_constraints_csv(io::read_file(constraints_path));
        const int n = static_cast<int>(data.cols());
        for (const auto* list : {&constraints.deps, &constraints.indeps})
            for (const auto& c : *list)
                if (c.i >= n || c.j >= n || c.tau > cfg.discovery.tau_max)
                    throw FormatError("constraint (j=" + std::to_string(c.j) + ", i=" + std::to_string(c.i) +
                                      ", tau=" + std::to_string(c.tau) + ") does not fit the data");
    } else {
        const idisc::InterventionalConfig icfg{cfg.discovery.tau_max, cfg.alpha_dep, cfg.alpha_indep, cfg.prune};
        constraints = idisc::discover_interventional(data, icfg);
    }
    const auto res = odisc::discover(data, constraints, cfg.discovery);
    io::write_file(out_path, graph::to_text(res.pag));
    if (constraints_out.empty()) constraints_out = out_path + ".constraints.csv";
    io::write_file(constraints_out, io::constraints_csv(constraints));
    return 0;
}

int replay_command(const std::string& manifest_path, const fs::path& out) {
    const json m = json::parse(io::read_file(manifest_path));
    Resolved r;
    config::KeyValues kv;
    for (const auto& [k, v] : m.at("config").items()) kv.emplace_back(k, v.get<std::string>());
    config::apply_all(r.cfg, r.run, kv);
    r.cfg.validate();
    json fresh = new_manifest(m.at("command").get<std::string>(), r);
    if (m.at("command") == "run") {
        run_command(r, out, fresh);
    } else if (m.at("command") == "sweep") {
        const auto& s = m.at("sweep");
        sweep_command(r, s.at("param").get<std::string>(), s.at("values").get<std::vector<std::string>>(),
                      s.at("episodes").get<std::size_t>(), out, fresh);
    } else {
        throw FormatError("manifest: unknown command");
    }
    int mismatches = 0;
    for (const auto& a : m.at("artifacts")) {
        const std::string path = a.at("path").get<std::string>();
        const std::string want = a.at("sha256").get<std::string>();
        const std::string got = io::sha256_hex(io::read_file(out / path));
        const bool ok = got == want;
        if (!ok) ++mismatches;
        std::cout << (ok ? "ok       " : "MISMATCH ") << path << '\n';
    }
    return mismatches ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulate, discover and control linear time-series SCMs"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
    int jobs = 1;

    auto* run = app.add_subcommand("run", "Run episodes");
    run->add_option("--config", config_path, "key=value config file")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    auto* run_seed = run->add_option("--seed", seed, "base seed");
    auto* run_jobs = run->add_option("--jobs", jobs, "worker threads");
    run->add_option("--set", sets, "override key=value");

    std::string param, values;
    std::size_t episodes = 1;
    auto* sw = app.add_subcommand("sweep", "Sweep one parameter");
    sw->add_option("--config", config_path, "key=value config file")->required();
    sw->add_option("--param", param, "parameter name")->required();
    sw->add_option("--values", values, "comma separated values")->required();
    sw->add_option("--episodes", episodes, "episodes per value")->required();
    sw->add_option("--out", out_dir, "output directory")->required();
    auto* sw_seed = sw->add_option("--seed", seed, "base seed");
    auto* sw_jobs = sw->add_option("--jobs", jobs, "worker threads");
    sw->add_option("--set", sets, "override key=value");

    std::string data_path, constraints_path, graph_out, constraints_out, disc_config;
    auto* disc = app.add_subcommand("discover", "Discover a graph from a series CSV");
    disc->add_option("--data", data_path, "series CSV")->required();
    disc->add_option("--constraints", constraints_path, "constraint CSV used instead of interventional discovery");
    disc->add_option("--out", graph_out, "graph text output")->required();
    disc->add_option("--constraints-out", constraints_out, "constraint CSV output (default <out>.constraints.csv)");
    disc->add_option("--config", disc_config, "key=value config with discovery settings");

    std::string manifest_path;
    auto* replay = app.add_subcommand("replay", "Re-run a manifest and compare artifact hashes");
    replay->add_option("--manifest", manifest_path, "manifest.json")->required();
    replay->add_option("--out", out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*run) {
            const auto t0 = std::chrono::steady_clock::now();
            const Resolved r = resolve(config_path, sets, run_seed->count() ? std::optional(seed) : std::nullopt,
                                       run_jobs->count() ? std::optional(jobs) : std::nullopt);
            json m = new_manifest("run", r);
            run_command(r, out_dir, m);
            m["wall_clock_seconds"]["command"] = seconds_since(t0);
            io::write_file(fs::path(out_dir) / "manifest.json", m.dump(2) + "\n");
            return 0;
        }
        if (*sw) {
            const Resolved r = resolve(config_path, sets, sw_seed->count() ? std::optional(seed) : std::nullopt,
                                       sw_jobs->count() ? std::optional(jobs) : std::nullopt);
            json m = new_manifest("sweep", r);
            sweep_command(r, param, split_values(values), episodes, out_dir, m);
            io::write_file(fs::path(out_dir) / "manifest.json", m.dump(2) + "\n");
            return 0;
        }
        if (*disc) return discover_command(data_path, constraints_path, graph_out, constraints_out, disc_config);
        if (*replay) return replay_command(manifest_path, out_dir);
    } catch (const ConfigError& e) {
        std::cerr << "config error [" << e.key() << "]: " << e.what() << '\n';
        return 1;
    } catch (const FormatError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
