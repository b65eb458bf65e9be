#pragma once

#include <filesystem>
#include <string>

#include "faim/bundle.hpp"

namespace faim {

// On-disk bundle layout: a directory holding
//   manifest.json  {version:1, n, d_o, d_ir, d_re, identity[], clothes[],
//                   camera[], role[] ("q"/"g"), reliability[]}
//   features.bin   n rows of (d_o + d_ir + d_re) little-endian f32, row-major,
//                  each row ordered (f_o, f_ir, f_re)
// Save followed by load reproduces the bundle bit-exactly.
//
// `extra_manifest_json`, when non-empty, must be a JSON object; its fields are
// merged into the manifest (used for generator config echoes).
void save_bundle(const EmbeddingBundle& bundle, const std::filesystem::path& dir,
                 const std::string& extra_manifest_json = "");

// Accepts either a bundle directory or a .csv fixture file (n <= 1000, header
// "identity,clothes,camera,role,reliability,o0..,ir0..,re0..").
EmbeddingBundle load_bundle(const std::filesystem::path& path);

EmbeddingBundle load_bundle_csv(const std::filesystem::path& file);

// Raw manifest text of a saved bundle directory (for reading config echoes).
std::string read_bundle_manifest(const std::filesystem::path& dir);

}  // namespace faim
