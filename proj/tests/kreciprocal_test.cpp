#include <algorithm>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "faim/errors.hpp"
#include "faim/kreciprocal.hpp"
#include "faim/oracle.hpp"
#include "support/builders.hpp"

namespace {

using fixtures::SampleSpec;

TEST(KReciprocalSet, TwoPointsAreMutualAtKOne) {
    const auto D = fixtures::square_matrix(2, {0.0, 0.5, 0.5, 0.0});
    EXPECT_EQ(faim::k_reciprocal_set(D, 0, 1).members, (std::vector<int>{1}));
    EXPECT_EQ(faim::k_reciprocal_set(D, 1, 1).members, (std::vector<int>{0}));
}

TEST(KReciprocalSet, LineEndpointKeepsItsNeighborThroughTheTieRule) {
    // Unit-spaced chain 0-1-2-3. At k=1 the middle points tie between both
    // sides and resolve to the lower index, so 1's top neighbor is 0 and the
    // endpoint keeps {1}.
    const auto D = fixtures::square_matrix(4, {0.0, 1.0, 2.0, 3.0,   //
                                               1.0, 0.0, 1.0, 2.0,   //
                                               2.0, 1.0, 0.0, 1.0,   //
                                               3.0, 2.0, 1.0, 0.0});
    EXPECT_EQ(faim::k_reciprocal_set(D, 0, 1).members, (std::vector<int>{1}));
}

TEST(KReciprocalSet, StarLeafWithUnrequitedHubIsEmpty) {
    // Hub 0 is every leaf's nearest point but answers only to leaf 1.
    const auto D = fixtures::square_matrix(4, {0.0, 1.0, 2.0, 3.0,    //
                                               1.0, 0.0, 10.0, 10.0,  //
                                               2.0, 10.0, 0.0, 10.0,  //
                                               3.0, 10.0, 10.0, 0.0});
    const auto set = faim::k_reciprocal_set(D, 3, 1);
    EXPECT_TRUE(set.members.empty());
    EXPECT_EQ(set.probe_id, 3);
}

TEST(KReciprocalSet, MembersAreSortedBoundedAndExcludeProbe) {
    const auto bundle = fixtures::random_bundle(20, 6, {5, 5, 5}, 99);
    const auto view = faim::space_view(bundle, faim::Space::Relevant);
    const auto D = faim::cosine_distance_matrix(view, view);
    for (int probe = 0; probe < 20; ++probe) {
        const auto set = faim::k_reciprocal_set(D, probe, 6);
        EXPECT_LE(set.members.size(), 6u);
        EXPECT_TRUE(std::is_sorted(set.members.begin(), set.members.end()));
        EXPECT_EQ(std::count(set.members.begin(), set.members.end(), probe), 0);
    }
}

TEST(Jaccard, HandValues) {
    EXPECT_DOUBLE_EQ(faim::jaccard_distance({1, 2}, {1, 2}), 0.0);
    EXPECT_DOUBLE_EQ(faim::jaccard_distance({1, 2}, {3, 4}), 1.0);
    EXPECT_DOUBLE_EQ(faim::jaccard_distance({1, 2, 3}, {3, 4, 5}), 0.8);
    EXPECT_DOUBLE_EQ(faim::jaccard_distance({}, {}), 1.0);
}

TEST(Jaccard, SharedElementNeverIncreasesDistance) {
    const std::vector<std::pair<std::vector<int>, std::vector<int>>> cases = {
        {{1, 2}, {3, 4}}, {{1, 2, 3}, {3, 4, 5}}, {{}, {}}, {{1}, {1}}, {{2, 4, 6}, {1, 3, 5}}};
    for (auto [a, b] : cases) {
        const double before = faim::jaccard_distance(a, b);
        a.push_back(100);
        b.push_back(100);
        EXPECT_LE(faim::jaccard_distance(a, b), before);
    }
}

// Query 0 sees the {2,3,4} cluster in the clothes-relevant space exactly the
// way gallery sample 1 sees it in the clothes-irrelevant space: the two
// spaces swap the roles of samples 0 and 1 and keep everything else in
// place. Ties only arise between bit-identical vectors, so the neighbor
// order is stable.
faim::EmbeddingBundle swapped_spaces_bundle() {
    std::vector<SampleSpec> specs(5);
    for (int i = 0; i < 5; ++i) {
        specs[i].identity = i;
        specs[i].clothes = i;
        specs[i].role = i == 0 ? faim::Role::Query : faim::Role::Gallery;
    }
    const std::vector<double> re = {0.5, 3.0, 0.44, 0.5, 0.57};
    const std::vector<double> ir = {3.0, 0.5, 0.44, 0.5, 0.57};
    return fixtures::bundle_from_angles(specs, re, ir, re);
}

TEST(RouteDistances, MatchingCrossSpaceNeighborhoodsGiveZero) {
    const auto bundle = faim::normalize_bundle(swapped_spaces_bundle());
    const auto rc = faim::route_distances_kr(bundle, 2);
    ASSERT_EQ(rc.dist.d_A.row_ids, (std::vector<int>{0}));
    ASSERT_EQ(rc.dist.d_A.col_ids, (std::vector<int>{1, 2, 3, 4}));
    EXPECT_DOUBLE_EQ(rc.dist.d_A.at(0, 0), 0.0);
}

TEST(RouteDistances, DisjointCrossSpaceNeighborhoodsGiveOne) {
    std::vector<SampleSpec> specs(6);
    for (int i = 0; i < 6; ++i) {
        specs[i].identity = i;
        specs[i].clothes = i;
        specs[i].role = i == 0 ? faim::Role::Query : faim::Role::Gallery;
    }
    const std::vector<double> angles = {0.5, 3.0, 0.44, 0.57, 2.94, 3.07};
    const auto bundle =
        faim::normalize_bundle(fixtures::bundle_from_angles(specs, angles));
    const auto rc = faim::route_distances_kr(bundle, 2);

    const auto view = faim::space_view(bundle, faim::Space::Relevant);
    const auto D = faim::cosine_distance_matrix(view, view);
    EXPECT_EQ(faim::k_reciprocal_set(D, 0, 2).members, (std::vector<int>{2, 3}));
    EXPECT_EQ(faim::k_reciprocal_set(D, 1, 2).members, (std::vector<int>{4, 5}));
    EXPECT_DOUBLE_EQ(rc.dist.d_A.at(0, 0), 1.0);
}

TEST(RouteDistances, IdenticalIrAndReSpacesCollapseTheRoutes) {
    std::vector<double> angles;
    faim::DrawStream rng(31);
    for (int i = 0; i < 12; ++i) angles.push_back(rng.uniform() * 3.1);
    const auto bundle = faim::normalize_bundle(
        fixtures::bundle_from_angles(fixtures::plain_specs(12, 4), angles));
    const auto rc = faim::route_distances_kr(bundle, 3);
    EXPECT_EQ(rc.dist.d_A.values, rc.dist.d_B.values);
    EXPECT_EQ(rc.dist.d_A.values, rc.dist.d_o.values);
}

TEST(RouteDistances, RangesAndShapesHold) {
    const auto bundle = faim::normalize_bundle(fixtures::random_bundle(24, 6, {6, 6, 6}, 4));
    const auto rc = faim::route_distances_kr(bundle, 5);
    for (const faim::DistanceMatrix* m :
         {&rc.dist.d_A, &rc.dist.d_B, &rc.dist.d_C, &rc.dist.d_o}) {
        ASSERT_EQ(m->rows, 6);
        ASSERT_EQ(m->cols, 18);
        for (double v : m->values) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(RouteDistances, RandomBundleMatchesNaiveReference) {
    const auto bundle = faim::normalize_bundle(fixtures::random_bundle(30, 8, {6, 6, 6}, 17));
    const auto rc = faim::route_distances_kr(bundle, 5);
    const auto naive =
        faim::oracle::route_distances_naive(bundle, 5, faim::ImMode::KReciprocal);
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

TEST(ExpandedSets, SupersetOfBaseAndMatchesNaive) {
    const auto bundle = faim::normalize_bundle(fixtures::random_bundle(24, 6, {5, 5, 5}, 71));
    const auto view = faim::space_view(bundle, faim::Space::Irrelevant);
    const auto D = faim::cosine_distance_matrix(view, view);
    const auto base = faim::all_k_reciprocal_sets(D, 6, false);
    const auto expanded = faim::all_k_reciprocal_sets(D, 6, true);
    for (int probe = 0; probe < 24; ++probe) {
        const std::set<int> base_set(base[probe].begin(), base[probe].end());
        const std::set<int> exp_set(expanded[probe].begin(), expanded[probe].end());
        EXPECT_TRUE(std::includes(exp_set.begin(), exp_set.end(), base_set.begin(),
                                  base_set.end()));
        EXPECT_EQ(exp_set, faim::oracle::expanded_k_reciprocal_set_naive(D, probe, 6));
    }
}

TEST(RouteDistances, OversizedKPropagates) {
    const auto bundle = faim::normalize_bundle(fixtures::random_bundle(8, 2, {4, 4, 4}, 1));
    EXPECT_THROW(faim::route_distances_kr(bundle, 8), faim::KTooLarge);
}

}  // namespace
