#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ccl/experiment.hpp"

namespace ccl::config {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// `key = value` lines; `#` starts a comment. Throws ConfigError on a line
/// without `=` or a repeated key.
KeyValues parse(const std::string& text);

/// Set one key. Throws ConfigError for unknown keys and bad values.
void apply(experiment::EpisodeConfig& cfg, const std::string& key, const std::string& value);

/// Run-level settings that are not part of an episode.
struct RunSettings {
    std::size_t episodes = 1;
    int jobs = 1;
};

/// Apply parsed pairs; `episodes` and `jobs` go to `run`.
void apply_all(experiment::EpisodeConfig& cfg, RunSettings& run, const KeyValues& kv);

/// Every key with its resolved value, in a fixed order.
KeyValues snapshot(const experiment::EpisodeConfig& cfg, const RunSettings& run);

std::vector<std::string> known_keys();

}  // namespace ccl::config
