#include "faim/distance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

namespace faim {

namespace {

std::vector<int> iota_ids(int n) {
    std::vector<int> ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

using RowMajorF =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMajorD =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

DistanceMatrix DistanceMatrix::zeros(std::vector<int> row_ids, std::vector<int> col_ids) {
    DistanceMatrix m;
    m.rows = static_cast<int>(row_ids.size());
    m.cols = static_cast<int>(col_ids.size());
    m.row_ids = std::move(row_ids);
    m.col_ids = std::move(col_ids);
    m.values.assign(static_cast<std::size_t>(m.rows) * m.cols, 0.0);
    return m;
}

DistanceMatrix DistanceMatrix::slice(const std::vector<int>& row_pos,
                                     const std::vector<int>& col_pos) const {
    DistanceMatrix out;
    out.rows = static_cast<int>(row_pos.size());
    out.cols = static_cast<int>(col_pos.size());
    out.row_ids.reserve(row_pos.size());
    out.col_ids.reserve(col_pos.size());
    for (int r : row_pos) out.row_ids.push_back(row_ids[static_cast<std::size_t>(r)]);
    for (int c : col_pos) out.col_ids.push_back(col_ids[static_cast<std::size_t>(c)]);
    out.values.resize(static_cast<std::size_t>(out.rows) * out.cols);
    for (int r = 0; r < out.rows; ++r) {
        for (int c = 0; c < out.cols; ++c) {
            out.at(r, c) = at(row_pos[static_cast<std::size_t>(r)],
                              col_pos[static_cast<std::size_t>(c)]);
        }
    }
    return out;
}

VectorSetView space_view(const EmbeddingBundle& bundle, Space s) {
    return {bundle.feature_matrix(s).data(), bundle.size(), bundle.dim(s)};
}

DistanceMatrix cosine_distance_matrix(const VectorSetView& a, const VectorSetView& b,
                                      std::vector<int> row_ids,
                                      std::vector<int> col_ids) {
    if (a.dim != b.dim) {
        throw DimMismatch("cosine_distance_matrix: dims " + std::to_string(a.dim) +
                          " vs " + std::to_string(b.dim));
    }
    if (row_ids.empty()) row_ids = iota_ids(a.count);
    if (col_ids.empty()) col_ids = iota_ids(b.count);
    DistanceMatrix out = DistanceMatrix::zeros(std::move(row_ids), std::move(col_ids));

    const Eigen::Map<const RowMajorF> ma(a.data, a.count, a.dim);
    const Eigen::Map<const RowMajorF> mb(b.data, b.count, b.dim);
    RowMajorD prod = ma.cast<double>() * mb.cast<double>().transpose();
    for (int i = 0; i < out.rows; ++i) {
        for (int j = 0; j < out.cols; ++j) {
            out.at(i, j) = 1.0 - std::clamp(prod(i, j), -1.0, 1.0);
        }
    }
    return out;
}

double cosine_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw DimMismatch("cosine_distance: dim mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
    }
    return 1.0 - std::clamp(dot, -1.0, 1.0);
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimMismatch("cosine_distance: dim mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return 1.0 - std::clamp(dot, -1.0, 1.0);
}

double scaled_similarity(double cosine_value) {
    return (std::clamp(cosine_value, -1.0, 1.0) + 1.0) / 2.0;
}

std::vector<std::vector<int>> top_k_neighbors(const DistanceMatrix& D, int k,
                                              bool exclude_self) {
    if (k <= 0) throw OutOfRange("top_k_neighbors: k must be positive");
    std::vector<std::vector<int>> out(static_cast<std::size_t>(D.rows));
    std::vector<int> candidates;
    candidates.reserve(static_cast<std::size_t>(D.cols));
    for (int r = 0; r < D.rows; ++r) {
        candidates.clear();
        const int self_id = D.row_ids[static_cast<std::size_t>(r)];
        for (int c = 0; c < D.cols; ++c) {
            if (exclude_self && D.col_ids[static_cast<std::size_t>(c)] == self_id) continue;
            candidates.push_back(c);
        }
        if (static_cast<int>(candidates.size()) < k) {
            throw KTooLarge(r, k, static_cast<int>(candidates.size()));
        }
        const double* row = D.values.data() + static_cast<std::size_t>(r) * D.cols;
        auto closer = [row](int x, int y) {
            if (row[x] != row[y]) return row[x] < row[y];
            return x < y;  // tie: ascending column index
        };
        std::nth_element(candidates.begin(), candidates.begin() + (k - 1),
                         candidates.end(), closer);
        candidates.resize(static_cast<std::size_t>(k));
        std::sort(candidates.begin(), candidates.end(), closer);
        out[static_cast<std::size_t>(r)] = candidates;
    }
    return out;
}

}  // namespace faim
