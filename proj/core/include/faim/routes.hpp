#pragma once

#include <vector>

#include "faim/bundle.hpp"
#include "faim/distance.hpp"

namespace faim {

// Which intermediary-matching backend produced a set of route distances.
enum class ImMode { KReciprocal, Gnn };

enum class RouteId { A, B, C };

// Query x gallery distances for the three intermediary routes plus the two
// direct terms. k-reciprocal route values live in [0,1] (Jaccard); GNN route
// values live in [-1,1] (negative cosine). d_direct is the raw cosine
// distance on the original feature, in [0,2].
struct RouteDistances {
    ImMode mode = ImMode::KReciprocal;
    DistanceMatrix d_A;
    DistanceMatrix d_B;
    DistanceMatrix d_C;
    DistanceMatrix d_direct;
    DistanceMatrix d_o;
};

// Everything a downstream feasibility pass needs besides the query x gallery
// distances: the union-set route-A matrix (route C's first hop and s^A), the
// raw cosine matrices of both decoupled spaces, and — in k-reciprocal mode —
// the reciprocal neighbor sets, indexed by sample id.
struct RouteComputation {
    RouteDistances dist;
    DistanceMatrix d_A_union;  // n x n, route-A distance between all pairs
    DistanceMatrix D_re;       // n x n cosine distance on f_re
    DistanceMatrix D_ir;       // n x n cosine distance on f_ir
    std::vector<std::vector<int>> recip_re;  // empty in GNN mode
    std::vector<std::vector<int>> recip_ir;
    std::vector<int> query_pos;    // union positions (== sample ids) of queries
    std::vector<int> gallery_pos;  // union positions of galleries
    int k = 0;
};

// Maps every route matrix onto [0,1] so both modes can share the same fusion
// rule: GNN negative cosines go through (x+1)/2, k-reciprocal values are
// already in range, and d_direct is halved when rescale_direct is set.
RouteDistances to_unit_range(const RouteDistances& rd, bool rescale_direct);

// Unit-range value of one raw route distance under the given mode.
double unit_route_value(double raw, ImMode mode);

}  // namespace faim
