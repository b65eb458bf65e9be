#pragma once

#include <vector>

#include "faim/bundle.hpp"
#include "faim/distance.hpp"
#include "faim/routes.hpp"

namespace faim {

// Mutual k-nearest-neighbor set of one probe row of a square distance
// matrix: members j such that j is in the probe's top-k and the probe is in
// j's top-k. Members are sample ids, sorted ascending. The probe itself is
// never a member.
struct ReciprocalSet {
    int probe_id = -1;
    int k = 0;
    std::vector<int> members;
};

ReciprocalSet k_reciprocal_set(const DistanceMatrix& dist, int probe_id, int k);

// Classic half-k expansion: the probe's set is unioned with the half-k
// reciprocal set of any member whose half-k set overlaps it by at least
// two thirds.
ReciprocalSet expanded_k_reciprocal_set(const DistanceMatrix& dist, int probe_id, int k);

// Jaccard distance between two ascending-sorted id sets; 1 when both are
// empty.
double jaccard_distance(const std::vector<int>& a, const std::vector<int>& b);

// Reciprocal sets for every row at once, indexed by row position.
std::vector<std::vector<int>> all_k_reciprocal_sets(const DistanceMatrix& dist, int k,
                                                    bool expansion);

struct KrOptions {
    bool expansion = false;
    int threads = 0;  // 0 = default_thread_count()
};

// Full k-reciprocal route computation over a validated, normalized bundle.
RouteComputation route_distances_kr(const EmbeddingBundle& bundle, int k,
                                    const KrOptions& options = {});

}  // namespace faim
