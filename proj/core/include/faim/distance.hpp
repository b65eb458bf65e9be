#pragma once

#include <span>
#include <vector>

#include "faim/bundle.hpp"
#include "faim/errors.hpp"

namespace faim {

// Dense row-major distance matrix with sample-id indexers for rows/columns.
// Values are kept in f64; all reductions feeding them accumulate in f64 so
// results do not depend on worker count or vector width.
struct DistanceMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<int> row_ids;
    std::vector<int> col_ids;
    std::vector<double> values;

    static DistanceMatrix zeros(std::vector<int> row_ids, std::vector<int> col_ids);

    double at(int r, int c) const {
        return values[static_cast<std::size_t>(r) * cols + c];
    }
    double& at(int r, int c) {
        return values[static_cast<std::size_t>(r) * cols + c];
    }
    // Row/column selection by position; ids follow.
    DistanceMatrix slice(const std::vector<int>& row_pos,
                         const std::vector<int>& col_pos) const;
};

// View over a set of row vectors stored contiguously.
struct VectorSetView {
    const float* data = nullptr;
    int count = 0;
    int dim = 0;
    std::span<const float> row(int i) const {
        return {data + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }
};

VectorSetView space_view(const EmbeddingBundle& bundle, Space s);

// out[i][j] = 1 - dot(a_i, b_j) for unit-norm inputs; cosines are clamped to
// [-1, 1] before conversion so f32 rounding cannot push values outside [0, 2].
DistanceMatrix cosine_distance_matrix(const VectorSetView& a, const VectorSetView& b,
                                      std::vector<int> row_ids = {},
                                      std::vector<int> col_ids = {});

double cosine_distance(std::span<const float> a, std::span<const float> b);
double cosine_distance(std::span<const double> a, std::span<const double> b);

// Maps a cosine in [-1, 1] to [0, 1]; out-of-range rounding noise is clamped.
double scaled_similarity(double cosine_value);

// Per-row indices of the k nearest columns, ascending by distance, ties broken
// by ascending column index. With exclude_self, the column whose id equals the
// row's id is skipped before counting. Throws KTooLarge when a row has fewer
// than k usable candidates.
std::vector<std::vector<int>> top_k_neighbors(const DistanceMatrix& D, int k,
                                              bool exclude_self);

}  // namespace faim
