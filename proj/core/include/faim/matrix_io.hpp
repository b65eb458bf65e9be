#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "faim/distance.hpp"
#include "faim/pipeline.hpp"

namespace faim {

// Values narrowed to f32, little-endian, row-major; shape and ids live in
// the sibling manifest.
void save_matrix_f32(const DistanceMatrix& matrix, const std::filesystem::path& path);

DistanceMatrix load_matrix_f32(const std::filesystem::path& path, std::vector<int> row_ids,
                               std::vector<int> col_ids);

void save_matrix_csv(const DistanceMatrix& matrix, const std::filesystem::path& path);

// Writes the ten rerank matrices as <name>.f32 plus rerank_manifest.json
// carrying shape, ids, and the caller's config echo. `also_csv` adds a .csv
// twin per matrix.
void save_rerank_artifacts(const RerankOutput& output, const std::filesystem::path& dir,
                           const std::string& config_echo_json, bool also_csv);

std::vector<std::string> rerank_artifact_names();

// Loads one named matrix of a rerank artifact directory via its manifest.
DistanceMatrix load_rerank_matrix(const std::filesystem::path& dir, const std::string& name);

// Raw manifest text of a rerank artifact directory.
std::string read_rerank_manifest(const std::filesystem::path& dir);

}  // namespace faim
