#include "ccl/config.hpp"

#include <charconv>
#include <functional>
#include <set>
#include <sstream>

#include "ccl/error.hpp"
#include "ccl/graph.hpp"

namespace ccl::config {

using experiment::EpisodeConfig;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError(key, key + ": expected a number, got '" + v + "'");
    return out;
}

template <class Int>
Int to_int(const std::string& key, const std::string& v) {
    Int out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError(key, key + ": expected an integer, got '" + v + "'");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw ConfigError(key, key + ": expected true/false, got '" + v + "'");
}

struct Field {
    std::function<void(EpisodeConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const EpisodeConfig&)> get;
};

std::string num(double v) { return graph::format_double(v); }

const std::vector<std::pair<std::string, Field>>& fields() {
    using C = EpisodeConfig;
    using S = const std::string&;
    static const std::vector<std::pair<std::string, Field>> f{
        {"seed", {[](C& c, S k, S v) { c.seed = to_int<std::uint64_t>(k, v); },
                  [](const C& c) { return std::to_string(c.seed); }}},
        {"mode", {[](C& c, S, S v) { c.mode = experiment::parse_mode(v); },
                  [](const C& c) { return experiment::to_string(c.mode); }}},
        {"n_total", {[](C& c, S k, S v) { c.scm.n_total = to_int<int>(k, v); },
                     [](const C& c) { return std::to_string(c.scm.n_total); }}},
        {"n_observed", {[](C& c, S k, S v) { c.scm.n_observed = to_int<int>(k, v); },
                        [](const C& c) { return std::to_string(c.scm.n_observed); }}},
        {"n_links", {[](C& c, S k, S v) { c.scm.n_links = to_int<int>(k, v); },
                     [](const C& c) { return std::to_string(c.scm.n_links); }}},
        {"frac_contemporaneous", {[](C& c, S k, S v) { c.scm.frac_contemporaneous = to_double(k, v); },
                                  [](const C& c) { return num(c.scm.frac_contemporaneous); }}},
        {"auto_min", {[](C& c, S k, S v) { c.scm.auto_min = to_double(k, v); },
                      [](const C& c) { return num(c.scm.auto_min); }}},
        {"auto_max", {[](C& c, S k, S v) { c.scm.auto_max = to_double(k, v); },
                      [](const C& c) { return num(c.scm.auto_max); }}},
        {"coeff_min", {[](C& c, S k, S v) { c.scm.coeff_min = to_double(k, v); },
                       [](const C& c) { return num(c.scm.coeff_min); }}},
        {"coeff_max", {[](C& c, S k, S v) { c.scm.coeff_max = to_double(k, v); },
                       [](const C& c) { return num(c.scm.coeff_max); }}},
        {"noise_min", {[](C& c, S k, S v) { c.scm.noise_min = to_double(k, v); },
                       [](const C& c) { return num(c.scm.noise_min); }}},
        {"noise_max", {[](C& c, S k, S v) { c.scm.noise_max = to_double(k, v); },
                       [](const C& c) { return num(c.scm.noise_max); }}},
        {"target_rule",
         {[](C& c, S k, S v) {
              if (v == "incoming_cross")
                  c.scm.target_rule = scm::TargetRule::IncomingCross;
              else if (v == "any")
                  c.scm.target_rule = scm::TargetRule::Any;
              else
                  throw ConfigError(k, k + ": expected incoming_cross or any, got '" + v + "'");
          },
          [](const C& c) {
              return std::string(c.scm.target_rule == scm::TargetRule::Any ? "any" : "incoming_cross");
          }}},
        {"max_attempts", {[](C& c, S k, S v) { c.scm.max_attempts = to_int<int>(k, v); },
                          [](const C& c) { return std::to_string(c.scm.max_attempts); }}},
        {"t_init", {[](C& c, S k, S v) { c.t_init = to_int<std::size_t>(k, v); },
                    [](const C& c) { return std::to_string(c.t_init); }}},
        {"t_max", {[](C& c, S k, S v) { c.t_max = to_int<std::size_t>(k, v); },
                   [](const C& c) { return std::to_string(c.t_max); }}},
        {"intervention_fraction", {[](C& c, S k, S v) { c.intervention_fraction = to_double(k, v); },
                                   [](const C& c) { return num(c.intervention_fraction); }}},
        {"eps0", {[](C& c, S k, S v) { c.eps0 = to_double(k, v); }, [](const C& c) { return num(c.eps0); }}},
        {"decay", {[](C& c, S k, S v) { c.decay = to_double(k, v); }, [](const C& c) { return num(c.decay); }}},
        {"alpha_obs", {[](C& c, S k, S v) { c.discovery.alpha_obs = to_double(k, v); },
                       [](const C& c) { return num(c.discovery.alpha_obs); }}},
        {"tau_max", {[](C& c, S k, S v) { c.discovery.tau_max = to_int<int>(k, v); },
                     [](const C& c) { return std::to_string(c.discovery.tau_max); }}},
        {"k", {[](C& c, S k, S v) { c.discovery.k = to_int<int>(k, v); },
               [](const C& c) { return std::to_string(c.discovery.k); }}},
        {"p_max", {[](C& c, S k, S v) { c.discovery.p_max = to_int<int>(k, v); },
                   [](const C& c) { return std::to_string(c.discovery.p_max); }}},
        {"alpha_dep", {[](C& c, S k, S v) { c.alpha_dep = to_double(k, v); },
                       [](const C& c) { return num(c.alpha_dep); }}},
        {"alpha_indep", {[](C& c, S k, S v) { c.alpha_indep = to_double(k, v); },
                         [](const C& c) { return num(c.alpha_indep); }}},
        {"prune_list",
         {[](C& c, S k, S v) {
              if (v == "deps")
                  c.prune = idisc::PruneList::Deps;
              else if (v == "indeps")
                  c.prune = idisc::PruneList::Indeps;
              else
                  throw ConfigError(k, k + ": expected deps or indeps, got '" + v + "'");
          },
          [](const C& c) { return std::string(c.prune == idisc::PruneList::Deps ? "deps" : "indeps"); }}},
        {"horizon", {[](C& c, S k, S v) { c.plan.horizon = to_int<int>(k, v); },
                     [](const C& c) { return std::to_string(c.plan.horizon); }}},
        {"mag_cap", {[](C& c, S k, S v) { c.plan.mag_cap = to_int<std::size_t>(k, v); },
                     [](const C& c) { return std::to_string(c.plan.mag_cap); }}},
        {"objective_mode",
         {[](C& c, S k, S v) {
              if (v == "signed_max")
                  c.plan.mode = control::ObjectiveMode::SignedMax;
              else if (v == "magnitude")
                  c.plan.mode = control::ObjectiveMode::Magnitude;
              else
                  throw ConfigError(k, k + ": expected signed_max or magnitude, got '" + v + "'");
          },
          [](const C& c) {
              return std::string(c.plan.mode == control::ObjectiveMode::SignedMax ? "signed_max" : "magnitude");
          }}},
        {"restarts", {[](C& c, S k, S v) { c.plan.restarts = to_int<int>(k, v); },
                      [](const C& c) { return std::to_string(c.plan.restarts); }}},
        {"discovery_stride", {[](C& c, S k, S v) { c.discovery_stride = to_int<std::size_t>(k, v); },
                              [](const C& c) { return std::to_string(c.discovery_stride); }}},
        {"trace", {[](C& c, S k, S v) { c.trace = to_bool(k, v); },
                   [](const C& c) { return std::string(c.trace ? "true" : "false"); }}},
    };
    return f;
}

}  // namespace

KeyValues parse(const std::string& text) {
    KeyValues out;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line, "line " + std::to_string(lineno) + ": expected key = value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("", "line " + std::to_string(lineno) + ": empty key");
        if (!seen.insert(key).second) throw ConfigError(key, key + ": repeated key");
        out.emplace_back(key, value);
    }
    return out;
}

void apply(EpisodeConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& [name, field] : fields()) {
        if (name == key) {
            field.set(cfg, key, value);
            return;
        }
    }
    throw ConfigError(key, "unknown key '" + key + "'");
}

void apply_all(EpisodeConfig& cfg, RunSettings& run, const KeyValues& kv) {
    for (const auto& [k, v] : kv) {
        if (k == "episodes") {
            run.episodes = to_int<std::size_t>(k, v);
            if (run.episodes < 1) throw ConfigError(k, "episodes: must be >= 1");
        } else if (k == "jobs") {
            run.jobs = to_int<int>(k, v);
            if (run.jobs < 1) throw ConfigError(k, "jobs: must be >= 1");
        } else {
            apply(cfg, k, v);
        }
    }
}

KeyValues snapshot(const EpisodeConfig& cfg, const RunSettings& run) {
    KeyValues out{{"episodes", std::to_string(run.episodes)}, {"jobs", std::to_string(run.jobs)}};
    for (const auto& [name, field] : fields()) out.emplace_back(name, field.get(cfg));
    return out;
}

std::vector<std::string> known_keys() {
    std::vector<std::string> out{"episodes", "jobs"};
    for (const auto& [name, field] : fields()) out.push_back(name);
    return out;
}

}  // namespace ccl::config
