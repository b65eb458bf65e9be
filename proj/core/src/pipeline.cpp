#include "faim/pipeline.hpp"

#include "faim/errors.hpp"
#include "faim/gnn.hpp"
#include "faim/kreciprocal.hpp"

namespace faim {

RouteComputation compute_routes(const EmbeddingBundle& bundle, const RerankOptions& options) {
    if (options.k <= 0) throw ConfigInvalid("k", "must be positive");
    if (options.k >= bundle.size())
        throw ConfigInvalid("k", "must be smaller than the bundle size " +
                                     std::to_string(bundle.size()));
    if (options.m_intermediaries <= 0) throw ConfigInvalid("m_intermediaries", "must be positive");
    if (options.mode == ImMode::KReciprocal) {
        KrOptions kr;
        kr.expansion = options.kr_expansion;
        kr.threads = options.threads;
        return route_distances_kr(bundle, options.k, kr);
    }
    GnnOptions gnn;
    gnn.threads = options.threads;
    return route_distances_gnn(bundle, options.k, gnn);
}

RerankOutput fuse_routes(const EmbeddingBundle& bundle, const RouteComputation& rc,
                         const RerankOptions& options) {
    RerankOutput out;
    out.raw = rc.dist;
    out.unit = to_unit_range(rc.dist, options.rescale_direct);
    if (options.dynamic_weights) {
        const int m = options.m_intermediaries;
        auto set_a = route_intermediaries(RouteId::A, rc, m);
        auto set_b = route_intermediaries(RouteId::B, rc, m);
        auto set_c = route_intermediaries(RouteId::C, rc, m);
        out.weights = feasibility_scores(bundle, rc, set_a, set_b, set_c, options.threads);
    } else {
        out.weights = fixed_weight_mode(options.fixed_a, options.fixed_b, options.fixed_c,
                                        out.unit.d_A.row_ids, out.unit.d_A.col_ids);
    }
    out.d_star = fuse_final_distance(out.unit, out.weights);
    return out;
}

RerankOutput rerank(const EmbeddingBundle& bundle, const RerankOptions& options) {
    EmbeddingBundle normalized = normalize_bundle(bundle);
    RouteComputation rc = compute_routes(normalized, options);
    return fuse_routes(normalized, rc, options);
}

}  // namespace faim
