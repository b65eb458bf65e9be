#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "faim/kreciprocal.hpp"
#include "faim/oracle.hpp"
#include "faim/pipeline.hpp"
#include "support/builders.hpp"

namespace {

using fixtures::SampleSpec;

faim::EmbeddingBundle identical_clique(int n) {
    const std::vector<SampleSpec> specs = fixtures::plain_specs(n, 1);
    return faim::normalize_bundle(
        fixtures::bundle_from_angles(specs, std::vector<double>(n, 0.7)));
}

TEST(NaiveRoutes, TwoLonelySamplesDisagreeCompletely) {
    const std::vector<SampleSpec> specs = fixtures::plain_specs(2, 1);
    const auto bundle =
        faim::normalize_bundle(fixtures::bundle_from_angles(specs, {0.2, 2.6}));
    const auto routes =
        faim::oracle::route_distances_naive(bundle, 1, faim::ImMode::KReciprocal);
    // Reciprocal singletons {1} and {0} share nothing.
    EXPECT_DOUBLE_EQ(routes.dist.d_A.at(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(routes.dist.d_B.at(0, 0), 1.0);
}

TEST(NaiveRoutes, IdenticalCliqueSetDistanceIsTwoOverN) {
    // Every reciprocal set is "everyone but me", so two distinct probes
    // always differ in exactly their own two ids: 1 - (n-2)/n.
    const int n = 4;
    const auto bundle = identical_clique(n);
    const auto routes =
        faim::oracle::route_distances_naive(bundle, n - 1, faim::ImMode::KReciprocal);
    for (double v : routes.dist.d_A.values) EXPECT_DOUBLE_EQ(v, 0.5);
    for (int q = 0; q < n; ++q)
        for (int t = 0; t < n; ++t)
            if (q != t) EXPECT_DOUBLE_EQ(routes.d_A_union.at(q, t), 0.5);
}

TEST(NaiveRoutes, GnnCliqueSaturatesAllRoutes) {
    const auto bundle = identical_clique(5);
    const auto routes = faim::oracle::route_distances_naive(bundle, 4, faim::ImMode::Gnn);
    for (const faim::DistanceMatrix* m :
         {&routes.dist.d_A, &routes.dist.d_B, &routes.dist.d_C, &routes.dist.d_o}) {
        for (double v : m->values) EXPECT_NEAR(v, -1.0, 1e-12);
    }
}

TEST(NaiveSets, AgreeWithTheOptimizedConvention) {
    const auto bundle = faim::normalize_bundle(fixtures::random_bundle(18, 4, {4, 4, 4}, 3));
    const auto view = faim::space_view(bundle, faim::Space::Relevant);
    const auto D = faim::cosine_distance_matrix(view, view);
    for (int probe = 0; probe < 18; ++probe) {
        const auto naive = faim::oracle::k_reciprocal_set_naive(D, probe, 4);
        const auto fast = faim::k_reciprocal_set(D, probe, 4);
        EXPECT_EQ(std::set<int>(fast.members.begin(), fast.members.end()), naive);
        EXPECT_EQ(naive.count(probe), 0u);
    }
}

TEST(FeasibilityNaive, GnnCliqueGivesFullRouteConfidence) {
    const auto bundle = identical_clique(5);
    const auto routes = faim::oracle::route_distances_naive(bundle, 4, faim::ImMode::Gnn);
    const auto w = faim::oracle::feasibility_naive(bundle, routes, 3);
    for (double v : w.s_A.values) EXPECT_NEAR(v, 1.0, 1e-6);
    for (double v : w.s_B.values) EXPECT_NEAR(v, 1.0, 1e-6);
    for (double v : w.s_C.values) EXPECT_NEAR(v, 1.0, 1e-6);
    for (double v : w.lambda_o.values) EXPECT_NEAR(v, 0.0, 1e-6);
}

TEST(FeasibilityNaive, KrCliqueKeepsSetDistanceInRouteC) {
    // Routes A and B bridge through literal neighbors and saturate; route C
    // walks the set distance, which the self-exclusion pins at 0.5.
    const auto bundle = identical_clique(4);
    const auto routes =
        faim::oracle::route_distances_naive(bundle, 3, faim::ImMode::KReciprocal);
    const auto w = faim::oracle::feasibility_naive(bundle, routes, 3);
    for (double v : w.s_A.values) EXPECT_NEAR(v, 1.0, 1e-6);
    for (double v : w.s_B.values) EXPECT_NEAR(v, 1.0, 1e-6);
    for (double v : w.s_C.values) EXPECT_NEAR(v, 0.5, 1e-6);
}

TEST(FeasibilityNaive, DeadReliabilityKillsEveryRoute) {
    const std::vector<SampleSpec> specs = fixtures::plain_specs(8, 2);
    std::vector<double> angles;
    for (int i = 0; i < 8; ++i) angles.push_back(0.1 + 0.33 * i);
    const auto bundle = faim::normalize_bundle(
        fixtures::bundle_from_angles(specs, angles, std::vector<double>(8, 0.0)));
    const auto routes =
        faim::oracle::route_distances_naive(bundle, 2, faim::ImMode::KReciprocal);
    const auto w = faim::oracle::feasibility_naive(bundle, routes, 2);
    for (const faim::DistanceMatrix* m : {&w.s_A, &w.s_B, &w.s_C})
        for (double v : m->values) EXPECT_EQ(v, 0.0);
    for (double v : w.lambda_o.values) EXPECT_EQ(v, 1.0);
}

TEST(Compare, EqualMatricesPassWithZeroDiff) {
    const auto m = fixtures::square_matrix(3, {0, 1, 2, 3, 4, 5, 6, 7, 8});
    const auto diff = faim::oracle::compare(m, m, 1e-12);
    EXPECT_TRUE(diff.pass);
    EXPECT_EQ(diff.max_abs_diff, 0.0);
}

TEST(Compare, ReportsTheWorstCell) {
    const auto ref = fixtures::square_matrix(2, {0.1, 0.2, 0.3, 0.4});
    auto got = ref;
    got.values[2] += 1e-3;
    const auto diff = faim::oracle::compare(ref, got, 1e-6, "d_star");
    EXPECT_FALSE(diff.pass);
    EXPECT_NEAR(diff.max_abs_diff, 1e-3, 1e-12);
    EXPECT_EQ(diff.row, 1);
    EXPECT_EQ(diff.col, 0);
    EXPECT_EQ(diff.stage, "d_star");
    EXPECT_EQ(diff.tolerance, 1e-6);
}

TEST(Compare, ToleranceBoundaryIsInclusive) {
    const double step = std::ldexp(1.0, -20);
    const auto ref = fixtures::square_matrix(1, {1.0});
    auto got = ref;
    got.values[0] += step;
    EXPECT_TRUE(faim::oracle::compare(ref, got, step).pass);
    EXPECT_FALSE(faim::oracle::compare(ref, got, step / 2).pass);
}

TEST(RerankNaive, MatchesTheOptimizedPipeline) {
    const auto bundle = faim::normalize_bundle(fixtures::random_bundle(30, 8, {6, 6, 6}, 57));
    for (const auto mode : {faim::ImMode::KReciprocal, faim::ImMode::Gnn}) {
        for (const bool dynamic : {true, false}) {
            faim::RerankOptions options;
            options.mode = mode;
            options.k = 5;
            options.m_intermediaries = 4;
            options.dynamic_weights = dynamic;
            options.threads = 1;
            const auto fast = faim::rerank(bundle, options);
            const auto slow = faim::oracle::rerank_naive(bundle, options);
            const auto diff = faim::oracle::compare_rerank(slow, fast, 1e-9);
            EXPECT_TRUE(diff.pass) << diff.stage << " off by " << diff.max_abs_diff << " at ("
                                   << diff.row << "," << diff.col << ")";
        }
    }
}

TEST(RerankNaive, ExpansionPathAgreesToo) {
    const auto bundle = faim::normalize_bundle(fixtures::random_bundle(26, 6, {5, 5, 5}, 63));
    faim::RerankOptions options;
    options.k = 4;
    options.m_intermediaries = 3;
    options.kr_expansion = true;
    options.threads = 1;
    const auto diff = faim::oracle::compare_rerank(faim::oracle::rerank_naive(bundle, options),
                                                   faim::rerank(bundle, options), 1e-9);
    EXPECT_TRUE(diff.pass) << diff.stage << " off by " << diff.max_abs_diff;
}

}  // namespace
