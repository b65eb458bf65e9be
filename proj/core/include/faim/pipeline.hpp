#pragma once

#include <cstdint>

#include "faim/bundle.hpp"
#include "faim/distance.hpp"
#include "faim/feasibility.hpp"
#include "faim/routes.hpp"

namespace faim {

struct RerankOptions {
    ImMode mode = ImMode::KReciprocal;
    int k = 20;
    int m_intermediaries = 10;
    bool dynamic_weights = true;  // false = fixed route weights below
    double fixed_a = 0.3;
    double fixed_b = 0.6;
    double fixed_c = 0.1;
    bool rescale_direct = true;
    bool kr_expansion = false;
    int threads = 0;  // 0 = default_thread_count()
};

// Query x gallery outputs of one re-ranking pass. `raw` holds the route
// matrices in their native ranges, `unit` the rescaled copies that entered
// the fusion.
struct RerankOutput {
    RouteDistances raw;
    RouteDistances unit;
    FeasibilityWeights weights;
    DistanceMatrix d_star;
};

RouteComputation compute_routes(const EmbeddingBundle& bundle, const RerankOptions& options);

// Fusion stage only; lets callers reuse one RouteComputation across several
// weighting configurations.
RerankOutput fuse_routes(const EmbeddingBundle& bundle, const RouteComputation& rc,
                         const RerankOptions& options);

// compute_routes + fuse_routes. The bundle is normalized internally.
RerankOutput rerank(const EmbeddingBundle& bundle, const RerankOptions& options);

}  // namespace faim
