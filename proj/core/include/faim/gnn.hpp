#pragma once

#include <vector>

#include "faim/bundle.hpp"
#include "faim/distance.hpp"
#include "faim/routes.hpp"

namespace faim {

// Mutual-neighbor indicator vector of one sample against the whole set.
// Entries: 1 when the pair are mutual k-nearest neighbors, 0.5 when only one
// direction holds, 0 otherwise. The owner's own entry is 1.
struct NeighborVector {
    int owner = -1;
    std::vector<double> values;
};

// One-hop aggregation of neighbor vectors; entries only grow, so every value
// is >= the matching NeighborVector entry.
struct NeighborEncoding {
    int owner = -1;
    std::vector<double> values;
};

NeighborVector neighbor_vector(const DistanceMatrix& dist, int k, int owner_id);

std::vector<NeighborVector> all_neighbor_vectors(const DistanceMatrix& dist, int k);

// h_i = g_i + sum_{j != i} e_ij^2 g_j. `edges` carries cosine similarities in
// [-1,1]; its shape must match the neighbor-vector count.
std::vector<NeighborEncoding> neighbor_encoding(const std::vector<NeighborVector>& g_all,
                                                const DistanceMatrix& edges);

struct GnnOptions {
    int threads = 0;  // 0 = default_thread_count()
};

// Full GNN route computation over a validated, normalized bundle. Route
// distances are negative cosines between neighbor encodings, in [-1,1].
RouteComputation route_distances_gnn(const EmbeddingBundle& bundle, int k,
                                     const GnnOptions& options = {});

}  // namespace faim
