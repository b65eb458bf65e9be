#pragma once

#include <string>
#include <vector>

#include "faim/bundle.hpp"
#include "faim/distance.hpp"
#include "faim/routes.hpp"

namespace faim {

// First-hop intermediaries for one query along one route, ordered by that
// route's first-leg distance (ties broken by ascending id). Empty sets carry
// the degenerate flag instead of erroring.
struct IntermediarySet {
    int query_id = -1;
    RouteId route = RouteId::A;
    std::vector<int> members;
    std::string source;
    bool degenerate = false;
};

// Per-pair route weights plus the residual weight on the direct terms.
// lambda_o = 1 - (s_A + s_B + s_C)/3 elementwise.
struct FeasibilityWeights {
    DistanceMatrix s_A;
    DistanceMatrix s_B;
    DistanceMatrix s_C;
    DistanceMatrix lambda_o;
};

IntermediarySet intermediary_set(RouteId route, int query_id, const RouteComputation& rc, int m);

// Sets for every query of the computation, aligned with rc.query_pos.
std::vector<IntermediarySet> route_intermediaries(RouteId route, const RouteComputation& rc,
                                                  int m);

// s_route(q,t) = mean over intermediaries i of first_hop(q,i) *
// second_hop(i,t) * reliability(i), with hop similarities mapped to [0,1].
FeasibilityWeights feasibility_scores(const EmbeddingBundle& bundle, const RouteComputation& rc,
                                      const std::vector<IntermediarySet>& set_a,
                                      const std::vector<IntermediarySet>& set_b,
                                      const std::vector<IntermediarySet>& set_c, int threads = 0);

FeasibilityWeights fixed_weight_mode(double s_a, double s_b, double s_c,
                                     std::vector<int> row_ids, std::vector<int> col_ids);

// d* = s_A d_A + s_B d_B + s_C d_C + lambda_o (d_direct + d_o). Inputs must
// already be on the shared [0,1] scale (see to_unit_range).
DistanceMatrix fuse_final_distance(const RouteDistances& unit_routes,
                                   const FeasibilityWeights& weights);

}  // namespace faim
