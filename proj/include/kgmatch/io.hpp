#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kgmatch/evaluation.hpp"
#include "kgmatch/gcn.hpp"
#include "kgmatch/saturation.hpp"
#include "kgmatch/synthgen.hpp"
#include "kgmatch/training.hpp"

namespace kgmatch {

using Json = nlohmann::ordered_json;

// Shortest text that round-trips (%.17g).
std::string format_double(double v);

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);
std::string read_file(const std::string& path);
std::string checksum_file(const std::string& path);
// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::string& path, std::string_view content);
std::string dump_json(const Json& j);

Json to_json(const GraphStats& s);
Json to_json(const SaturationReport& r);

Json to_json(const SynthConfig& c);
SynthConfig synth_config_from_json(const Json& j);
Json to_json(const GroundTruthLedger& ledger);
GroundTruthLedger ledger_from_json(const Json& j);

Json to_json(const GcnConfig& c);
GcnConfig gcn_config_from_json(const Json& j);
Json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j);

// Self-describing checkpoint: configs, per-layer shapes, seed, values.
Json checkpoint_to_json(const GcnConfig& config, const GcnParams<double>& params, const TemperatureParam& temperature,
                        std::uint64_t seed);
struct Checkpoint {
  GcnConfig config;
  GcnParams<double> params;
  TemperatureParam temperature;
  std::uint64_t seed = 0;
};
Checkpoint checkpoint_from_json(const Json& j);

Json to_json(const MetricSummary& s);
Json to_json(const MetricReport& r);

// CSV: iri,v0..v{d-1}; one row per column of `vectors`.
std::string embeddings_to_csv(const std::vector<std::string>& iris, const Eigen::MatrixXd& vectors);
std::pair<std::vector<std::string>, Eigen::MatrixXd> embeddings_from_csv(std::string_view text);

std::string loss_history_to_csv(const std::vector<EpochRecord>& history);

// CSV: iri,label.
std::string assignments_to_csv(const std::vector<std::string>& iris, const std::vector<int>& labels);
std::pair<std::vector<std::string>, std::vector<int>> assignments_from_csv(std::string_view text);

std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace kgmatch
