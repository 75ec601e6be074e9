#pragma once

// On-disk dataset format: a JSON manifest next to tab-separated files.
//
//   manifest.json          {"format_version": 1, "name": ..., "num_nodes": N,
//                           "d_obs": Do, "d_unobs": Du,
//                           "files": {"edges": ..., "features_obs": ...,
//                                     "features_unobs_vocal": ..., "population": ...,
//                                     "labels": ..., "split": ... (optional)}}
//   population.tsv         node_id  population      (vocal|silent, or 0|1)
//   edges.tsv              src      dst             (undirected, duplicates allowed)
//   features_obs.tsv       node_id  o0 ... o{Do-1}
//   features_unobs_vocal   node_id  u0 ... u{Du-1}  (vocal nodes only)
//   labels.tsv             node_id  label           (0, 1, or -1 for unknown)
//   split.tsv              node_id  split           (train|val|test|none)
//
// Every file has one header row. Node ids are arbitrary tokens; the row order
// of population.tsv assigns the dense ids 0..N-1. Numbers are written with 9
// significant digits using '.' as the radix regardless of locale.

#include "ktgnn/graph.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace ktgnn {

inline constexpr int kFormatVersion = 1;
inline constexpr int kFeatureDigits = 9;

struct DatasetManifest {
  int format_version = kFormatVersion;
  std::string name;
  Index num_nodes = 0;
  Index d_obs = 0;
  Index d_unobs = 0;
  std::string edges = "edges.tsv";
  std::string features_obs = "features_obs.tsv";
  std::string features_unobs_vocal = "features_unobs_vocal.tsv";
  std::string population = "population.tsv";
  std::string labels = "labels.tsv";
  std::optional<std::string> split;

  [[nodiscard]] nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
};

DatasetManifest read_manifest(const std::filesystem::path& manifest_path);

/// Throws DataError with file and line on malformed input.
VSGraph load_dataset(const std::filesystem::path& manifest_path);

/// Writes manifest.json and the TSV files into `dir` (created if needed).
/// Returns the manifest path.
std::filesystem::path save_dataset(const VSGraph& g, const std::filesystem::path& dir,
                                   const std::string& name, bool write_split = false);

/// Decimal text with `digits` significant digits, locale-independent.
std::string format_decimal(double v, int digits = kFeatureDigits);
/// Locale-independent strict parse of a whole token.
std::optional<double> parse_decimal(std::string_view s);

/// Rounds every feature value to what a save/load cycle would produce.
VSGraph round_features(const VSGraph& g);

}  // namespace ktgnn
