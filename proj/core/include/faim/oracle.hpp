#pragma once

#include <set>
#include <string>
#include <vector>

#include "faim/bundle.hpp"
#include "faim/distance.hpp"
#include "faim/eval.hpp"
#include "faim/feasibility.hpp"
#include "faim/pipeline.hpp"
#include "faim/routes.hpp"

// Brute-force reference implementations, kept free of any computational code
// from the optimized modules; only plain data types are shared. Everything
// here favors obviousness over speed and runs single-threaded.
namespace faim::oracle {

DistanceMatrix cosine_matrix_naive(const EmbeddingBundle& bundle, Space space);

std::vector<int> top_k_naive(const DistanceMatrix& dist, int row, int k, bool exclude_self);

std::set<int> k_reciprocal_set_naive(const DistanceMatrix& dist, int probe, int k);

std::set<int> expanded_k_reciprocal_set_naive(const DistanceMatrix& dist, int probe, int k);

double jaccard_naive(const std::set<int>& a, const std::set<int>& b);

struct NaiveRoutes {
    RouteDistances dist;       // raw route values, query x gallery
    DistanceMatrix d_A_union;  // n x n
    DistanceMatrix D_re;
    DistanceMatrix D_ir;
    int k = 0;
    bool expansion = false;
};

NaiveRoutes route_distances_naive(const EmbeddingBundle& bundle, int k, ImMode mode,
                                  bool kr_expansion = false);

std::vector<std::vector<int>> intermediaries_naive(const NaiveRoutes& routes,
                                                   const EmbeddingBundle& bundle, RouteId route,
                                                   int m);

FeasibilityWeights feasibility_naive(const EmbeddingBundle& bundle, const NaiveRoutes& routes,
                                     int m);

DistanceMatrix fuse_naive(const RouteDistances& unit_routes, const FeasibilityWeights& weights);

struct NaiveRerank {
    RouteDistances raw;
    RouteDistances unit;
    FeasibilityWeights weights;
    DistanceMatrix d_star;
};

NaiveRerank rerank_naive(const EmbeddingBundle& bundle, const RerankOptions& options);

EvalReport evaluate_naive(const EmbeddingBundle& bundle, const DistanceMatrix& distances,
                          EvalSetting setting, const EvalOptions& options = {});

struct DiffReport {
    double max_abs_diff = 0.0;
    int row = -1;
    int col = -1;
    std::string stage;
    double tolerance = 0.0;
    bool pass = true;
};

DiffReport compare(const DistanceMatrix& reference, const DistanceMatrix& optimized,
                   double tolerance, const std::string& stage = "");

// Worst cell across raw and unit route matrices, the four weight matrices
// and d_star.
DiffReport compare_rerank(const NaiveRerank& reference, const RerankOutput& optimized,
                          double tolerance);

}  // namespace faim::oracle
