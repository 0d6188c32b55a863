#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "ccl/experiment.hpp"
#include "ccl/idiscovery.hpp"
#include "ccl/series.hpp"

namespace ccl::io {

/// `t,x0,...,x{n-1},do0,...,do{n-1}`.
std::string series_csv(const Series& s);
/// Accepts files with or without the do columns (absent means observational).
Series parse_series_csv(const std::string& text);

/// `kind,j,i,tau,p`.
std::string constraints_csv(const idisc::ConstraintList& c);
idisc::ConstraintList parse_constraints_csv(const std::string& text);

std::string episode_csv(const experiment::EpisodeResult& e);
/// One summary row: `episodes,mean_avg_regret,q1,median,q3,min,max,mean_optimal_fraction`.
std::string aggregate_csv(const experiment::Aggregate& a);
std::string sweep_csv(std::span<const experiment::SweepRow> rows);
/// One row per episode per swept value.
std::string boxplot_csv(std::span<const experiment::SweepRow> rows);

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& content);

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);

}  // namespace ccl::io
