#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "faim/bundle.hpp"

namespace faim {

// Knobs of the hierarchical identity -> clothes -> sample generator.
// degrade_* controls how many f_ir rows lose identity signal and how badly;
// drop_same_clothes_fraction removes that share of the queries'
// same-(identity, clothes) gallery mates after role assignment.
struct WorldConfig {
    int n_identities = 50;
    int clothes_per_identity = 3;
    int samples_per_clothes = 6;
    int n_cameras = 4;
    BundleDims dims{64, 128, 128};
    double sigma_ir = 0.5;
    double sigma_re = 0.3;
    double degrade_fraction = 0.0;
    double degrade_strength = 0.0;
    double drop_same_clothes_fraction = 0.0;
    double query_fraction = 0.25;
    uint64_t seed = 0;
};

// Ground truth the generator knows about each emitted sample, aligned with
// the bundle's sample ids.
struct WorldTruth {
    std::vector<int> identity;
    std::vector<int> clothes;
    std::vector<int> camera;
    std::vector<uint8_t> degraded;
    std::vector<double> reliability;
};

std::pair<EmbeddingBundle, WorldTruth> generate_world(const WorldConfig& config);

// Role assignment that guarantees every query keeps at least one
// same-identity different-clothes gallery sample: queries are drawn from one
// seeded clothes group per identity, whose first member always stays in the
// gallery.
EmbeddingBundle make_cc_split(const EmbeddingBundle& bundle, const WorldTruth& truth,
                              double query_fraction, uint64_t seed);

}  // namespace faim
