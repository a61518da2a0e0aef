#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hgformer/dataset.hpp"
#include "hgformer/model.hpp"
#include "hgformer/train.hpp"

#include <nlohmann/json.hpp>

namespace hgformer {

/// On-disk dataset description (JSON). Paths are relative to the
/// manifest's directory unless absolute.
///
///   { "name": "cora_cc", "num_nodes": 2708, "num_classes": 7,
///     "edges": "edges.txt", "features": "features.tsv",
///     "labels": "labels.tsv", "weights": "weights.txt" }   // weights optional
///
/// edges.txt    one hyperedge per line, whitespace-separated 0-based ids
/// features.tsv one row per node, tab/space-separated reals
/// labels.tsv   "node_id<TAB>class_id", one line per node
/// weights.txt  one positive real per line, aligned with edges.txt
/// Blank lines and lines starting with '#' are ignored everywhere.
struct DatasetManifest {
  std::string name;
  std::size_t num_nodes = 0;
  int num_classes = 0;
  std::filesystem::path edges;
  std::filesystem::path features;
  std::filesystem::path labels;
  std::optional<std::filesystem::path> weights;
};

DatasetManifest read_manifest(const std::filesystem::path& manifest_path);

Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes the four files plus the manifest into `dir` (created if needed)
/// and returns the manifest path. Reals are printed round-trip exact.
std::filesystem::path save_dataset(const Dataset& data, const std::filesystem::path& dir);

nlohmann::json config_to_json(const ModelConfig& cfg);

/// `fold,accuracy` rows followed by `mean,<v>` and `std,<v>`.
void write_report_csv(const TrainReport& report, std::ostream& out);
nlohmann::json report_to_json(const TrainReport& report);

/// `value,mean,std`.
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

/// Text checkpoint: per parameter one header line `name rows cols`
/// followed by one line of row-major values.
template <class T>
void save_checkpoint(const Params<T>& params, std::ostream& out);

/// Overwrites values of existing entries; unknown names or shape changes
/// are errors.
template <class T>
void load_checkpoint(Params<T>& params, std::istream& in);

}  // namespace hgformer
