#pragma once

#include "maic/harness.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace maic {

using Json = nlohmann::json;

/// Raised for unreadable or malformed input files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Comma-separated matrix, one row per line, 17 significant digits.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

/// Scenario file format (JSON). See scenarios/*.json for complete examples.
Json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const Json& j);
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const std::filesystem::path& path, const Scenario& s);

Json theory_json(const TheoryReport& r);
Json certificate_json(const WeightSolution& sol);
Json summary_json(const ScenarioResult& r);

/// iter, then one column per strategy with the network MSD in dB.
void write_curves_csv(const std::filesystem::path& path, const ScenarioResult& r);
/// iter, then one column per (strategy, cluster) pair in dB.
void write_cluster_curves_csv(const std::filesystem::path& path, const ScenarioResult& r);

/// Writes curves.csv, cluster_curves.csv, summary.json and weights_<label>.csv into `dir`.
void write_outputs(const std::filesystem::path& dir, const ScenarioResult& r);

}  // namespace maic
