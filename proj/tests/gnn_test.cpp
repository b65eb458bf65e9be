#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "faim/errors.hpp"
#include "faim/gnn.hpp"
#include "faim/oracle.hpp"
#include "support/builders.hpp"

namespace {

using fixtures::SampleSpec;

TEST(NeighborVector, CoversAllThreeBranches) {
    // k=1 top neighbors: 0 and 1 pick each other, 2 picks 1 unrequited.
    const auto D = fixtures::square_matrix(3, {0.0, 1.0, 5.0,   //
                                               1.0, 0.0, 2.0,   //
                                               5.0, 2.0, 0.0});
    const auto g0 = faim::neighbor_vector(D, 1, 0);
    EXPECT_EQ(g0.values, (std::vector<double>{1.0, 1.0, 0.0}));
    const auto g2 = faim::neighbor_vector(D, 1, 2);
    EXPECT_EQ(g2.values, (std::vector<double>{0.0, 0.5, 1.0}));
    EXPECT_EQ(g2.owner, 2);
}

TEST(NeighborVector, OwnEntryIsAlwaysOne) {
    const auto bundle = fixtures::random_bundle(10, 3, {4, 4, 4}, 13);
    const auto view = faim::space_view(bundle, faim::Space::Relevant);
    const auto D = faim::cosine_distance_matrix(view, view);
    for (const auto& g : faim::all_neighbor_vectors(D, 3)) {
        EXPECT_DOUBLE_EQ(g.values[g.owner], 1.0);
        for (double v : g.values) EXPECT_TRUE(v == 0.0 || v == 0.5 || v == 1.0);
    }
}

TEST(NeighborEncoding, ZeroEdgesLeaveIndicatorsAlone) {
    const auto D = fixtures::square_matrix(3, {0.0, 1.0, 5.0,   //
                                               1.0, 0.0, 2.0,   //
                                               5.0, 2.0, 0.0});
    const auto g = faim::all_neighbor_vectors(D, 1);
    const auto edges = fixtures::square_matrix(3, std::vector<double>(9, 0.0));
    const auto h = faim::neighbor_encoding(g, edges);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(h[i].values, g[i].values);
}

TEST(NeighborEncoding, UnitEdgeAddsTheWholeNeighbor) {
    const auto D = fixtures::square_matrix(2, {0.0, 0.2, 0.2, 0.0});
    const auto g = faim::all_neighbor_vectors(D, 1);
    const auto edges = fixtures::square_matrix(2, {1.0, 1.0, 1.0, 1.0});
    const auto h = faim::neighbor_encoding(g, edges);
    for (size_t j = 0; j < 2; ++j)
        EXPECT_DOUBLE_EQ(h[0].values[j], g[0].values[j] + g[1].values[j]);
}

TEST(NeighborEncoding, HalfEdgeContributesAQuarter) {
    const auto D = fixtures::square_matrix(2, {0.0, 0.2, 0.2, 0.0});
    const auto g = faim::all_neighbor_vectors(D, 1);
    const auto edges = fixtures::square_matrix(2, {1.0, 0.5, 0.5, 1.0});
    const auto h = faim::neighbor_encoding(g, edges);
    for (size_t j = 0; j < 2; ++j)
        EXPECT_DOUBLE_EQ(h[0].values[j], g[0].values[j] + 0.25 * g[1].values[j]);
}

TEST(NeighborEncoding, EdgeShapeMismatchThrows) {
    const auto D = fixtures::square_matrix(2, {0.0, 0.2, 0.2, 0.0});
    const auto g = faim::all_neighbor_vectors(D, 1);
    const auto edges = fixtures::square_matrix(3, std::vector<double>(9, 0.5));
    EXPECT_THROW(faim::neighbor_encoding(g, edges), faim::ShapeMismatch);
}

TEST(NeighborEncoding, NeverBelowTheIndicator) {
    const auto bundle = fixtures::random_bundle(14, 4, {5, 5, 5}, 47);
    const auto view = faim::space_view(bundle, faim::Space::Irrelevant);
    const auto D = faim::cosine_distance_matrix(view, view);
    const auto g = faim::all_neighbor_vectors(D, 4);
    // Edge weights are cosines of the same space.
    auto edges = D;
    for (double& v : edges.values) v = 1.0 - v;
    const auto h = faim::neighbor_encoding(g, edges);
    for (int i = 0; i < 14; ++i)
        for (size_t j = 0; j < h[i].values.size(); ++j)
            EXPECT_GE(h[i].values[j], g[i].values[j]);
}

TEST(RouteDistancesGnn, CliqueOfIdenticalPointsSaturates) {
    std::vector<SampleSpec> specs = fixtures::plain_specs(5, 1);
    const std::vector<double> angles(5, 0.7);
    const auto bundle = faim::normalize_bundle(fixtures::bundle_from_angles(specs, angles));

    const auto view = faim::space_view(bundle, faim::Space::Relevant);
    const auto D = faim::cosine_distance_matrix(view, view);
    for (const auto& g : faim::all_neighbor_vectors(D, 4))
        EXPECT_EQ(g.values, std::vector<double>(5, 1.0));

    const auto rc = faim::route_distances_gnn(bundle, 4);
    for (const faim::DistanceMatrix* m :
         {&rc.dist.d_A, &rc.dist.d_B, &rc.dist.d_C, &rc.dist.d_o}) {
        for (double v : m->values) EXPECT_NEAR(v, -1.0, 1e-12);
    }
}

TEST(RouteDistancesGnn, AlignedAndOrthogonalEncodings) {
    // Two tight pairs {0,1} and {2,3}, axis-aligned so the pairs are exactly
    // orthogonal; the ir space repeats the structure with the axes swapped.
    std::vector<SampleSpec> specs = fixtures::plain_specs(4, 1);
    const double quarter = std::acos(0.0);
    const std::vector<double> re = {0.0, 0.0, quarter, quarter};
    const std::vector<double> ir = {quarter, quarter, 0.0, 0.0};
    const auto bundle = faim::normalize_bundle(fixtures::bundle_from_angles(specs, re, ir, re));
    const auto rc = faim::route_distances_gnn(bundle, 1);
    ASSERT_EQ(rc.dist.d_A.col_ids, (std::vector<int>{1, 2, 3}));
    // Same pair in both spaces: encodings align, cosine 1.
    EXPECT_NEAR(rc.dist.d_A.at(0, 0), -1.0, 1e-9);
    // Opposite pair: encodings live on disjoint axes, cosine 0.
    EXPECT_NEAR(rc.dist.d_A.at(0, 1), 0.0, 1e-12);
}

TEST(RouteDistancesGnn, ValuesStayInMinusOneOne) {
    const auto bundle = faim::normalize_bundle(fixtures::random_bundle(24, 6, {6, 6, 6}, 5));
    const auto rc = faim::route_distances_gnn(bundle, 5);
    for (const faim::DistanceMatrix* m :
         {&rc.dist.d_A, &rc.dist.d_B, &rc.dist.d_C, &rc.dist.d_o}) {
        for (double v : m->values) {
            EXPECT_GE(v, -1.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(RouteDistancesGnn, RandomBundleMatchesNaiveReference) {
    const auto bundle = faim::normalize_bundle(fixtures::random_bundle(30, 8, {6, 6, 6}, 29));
    const auto rc = faim::route_distances_gnn(bundle, 5);
    const auto naive = faim::oracle::route_distances_naive(bundle, 5, faim::ImMode::Gnn);
    const std::pair<const faim::DistanceMatrix*, const faim::DistanceMatrix*> stages[] = {
        {&rc.dist.d_A, &naive.dist.d_A},   {&rc.dist.d_B, &naive.dist.d_B},
        {&rc.dist.d_C, &naive.dist.d_C},   {&rc.dist.d_direct, &naive.dist.d_direct},
        {&rc.dist.d_o, &naive.dist.d_o},
    };
    for (const auto& [optimized, reference] : stages) {
        const auto diff = faim::oracle::compare(*reference, *optimized, 1e-9);
        EXPECT_TRUE(diff.pass) << "max diff " << diff.max_abs_diff << " at (" << diff.row << ","
                               << diff.col << ")";
    }
}

}  // namespace
