#include "faim/gnn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "faim/errors.hpp"
#include "faim/parallel.hpp"

namespace faim {

namespace {

using MatrixXdR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require_square(const DistanceMatrix& dist, const char* what) {
    if (dist.rows != dist.cols)
        throw ShapeMismatch(std::string(what) + " needs a square matrix, got " +
                            std::to_string(dist.rows) + "x" + std::to_string(dist.cols));
}

// g(i,j) accumulates 0.5 per direction of the kNN relation; mutual pairs end
// at 1, one-sided at 0.5. Diagonal forced to 1.
MatrixXdR indicator_matrix(const DistanceMatrix& dist, int k) {
    const int n = dist.rows;
    auto nn = top_k_neighbors(dist, k, /*exclude_self=*/true);
    MatrixXdR g = MatrixXdR::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j : nn[i]) {
            g(i, j) += 0.5;
            g(j, i) += 0.5;
        }
    for (int i = 0; i < n; ++i) g(i, i) = 1.0;
    return g;
}

// h = g + (e^2 with zero diagonal) * g.
MatrixXdR encode(const MatrixXdR& g, const MatrixXdR& edges) {
    MatrixXdR w = edges.array().square().matrix();
    w.diagonal().setZero();
    MatrixXdR h = g + w * g;
    return h;
}

// Rows scaled to unit norm so encoding cosines become plain dot products.
MatrixXdR normalize_rows(const MatrixXdR& h, const char* which) {
    MatrixXdR out = h;
    for (int i = 0; i < out.rows(); ++i) {
        const double norm = out.row(i).norm();
        if (norm < 1e-12) throw ZeroVectorError(i, which);
        out.row(i) /= norm;
    }
    return out;
}

MatrixXdR similarity_from_distance(const DistanceMatrix& dist) {
    Eigen::Map<const MatrixXdR> d(dist.values.data(), dist.rows, dist.cols);
    return (1.0 - d.array()).cwiseMin(1.0).cwiseMax(-1.0).matrix();
}

// Negative-cosine matrix between two row-normalized encoding sets, clamped
// into [-1,1].
DistanceMatrix negative_cosine(const MatrixXdR& a, const MatrixXdR& b, std::vector<int> row_ids,
                               std::vector<int> col_ids) {
    MatrixXdR prod = a * b.transpose();
    DistanceMatrix out = DistanceMatrix::zeros(std::move(row_ids), std::move(col_ids));
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c)
            out.values[static_cast<size_t>(r) * out.cols + c] =
                -std::clamp(prod(r, c), -1.0, 1.0);
    return out;
}

MatrixXdR select_rows(const MatrixXdR& m, const std::vector<int>& rows) {
    MatrixXdR out(static_cast<int>(rows.size()), m.cols());
    for (int r = 0; r < out.rows(); ++r) out.row(r) = m.row(rows[r]);
    return out;
}

}  // namespace

NeighborVector neighbor_vector(const DistanceMatrix& dist, int k, int owner_id) {
    require_square(dist, "neighbor_vector");
    auto it = std::find(dist.row_ids.begin(), dist.row_ids.end(), owner_id);
    if (it == dist.row_ids.end())
        throw OutOfRange("owner id " + std::to_string(owner_id) + " not present in distance matrix");
    const int pos = static_cast<int>(it - dist.row_ids.begin());
    MatrixXdR g = indicator_matrix(dist, k);
    NeighborVector out;
    out.owner = owner_id;
    out.values.assign(g.row(pos).data(), g.row(pos).data() + dist.cols);
    return out;
}

std::vector<NeighborVector> all_neighbor_vectors(const DistanceMatrix& dist, int k) {
    require_square(dist, "neighbor_vector");
    MatrixXdR g = indicator_matrix(dist, k);
    std::vector<NeighborVector> out(dist.rows);
    for (int i = 0; i < dist.rows; ++i) {
        out[i].owner = dist.row_ids[i];
        out[i].values.assign(g.row(i).data(), g.row(i).data() + dist.cols);
    }
    return out;
}

std::vector<NeighborEncoding> neighbor_encoding(const std::vector<NeighborVector>& g_all,
                                                const DistanceMatrix& edges) {
    require_square(edges, "neighbor_encoding");
    const int n = static_cast<int>(g_all.size());
    if (edges.rows != n)
        throw ShapeMismatch("edge matrix is " + std::to_string(edges.rows) + "x" +
                            std::to_string(edges.cols) + " for " + std::to_string(n) +
                            " neighbor vectors");
    MatrixXdR g(n, n);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(g_all[i].values.size()) != n)
            throw ShapeMismatch("neighbor vector " + std::to_string(i) + " has length " +
                                std::to_string(g_all[i].values.size()) + ", expected " +
                                std::to_string(n));
        for (int j = 0; j < n; ++j) g(i, j) = g_all[i].values[j];
    }
    Eigen::Map<const MatrixXdR> e(edges.values.data(), n, n);
    MatrixXdR h = encode(g, e);
    std::vector<NeighborEncoding> out(n);
    for (int i = 0; i < n; ++i) {
        out[i].owner = g_all[i].owner;
        out[i].values.assign(h.row(i).data(), h.row(i).data() + n);
    }
    return out;
}

RouteComputation route_distances_gnn(const EmbeddingBundle& bundle, int k,
                                     const GnnOptions& options) {
    (void)options;
    const int n = bundle.size();
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;

    RouteComputation rc;
    rc.k = k;
    rc.query_pos = bundle.query_ids();
    rc.gallery_pos = bundle.gallery_ids();
    rc.dist.mode = ImMode::Gnn;

    rc.D_re = cosine_distance_matrix(space_view(bundle, Space::Relevant),
                                     space_view(bundle, Space::Relevant));
    rc.D_ir = cosine_distance_matrix(space_view(bundle, Space::Irrelevant),
                                     space_view(bundle, Space::Irrelevant));

    MatrixXdR h_re = normalize_rows(
        encode(indicator_matrix(rc.D_re, k), similarity_from_distance(rc.D_re)), "h_re");
    MatrixXdR h_ir = normalize_rows(
        encode(indicator_matrix(rc.D_ir, k), similarity_from_distance(rc.D_ir)), "h_ir");

    rc.d_A_union = negative_cosine(h_re, h_ir, all, all);
    rc.dist.d_A = rc.d_A_union.slice(rc.query_pos, rc.gallery_pos);

    // d_B(q, t) = -cos(h_ir_q, h_re_t) = d_A_union(t, q).
    rc.dist.d_B = DistanceMatrix::zeros(rc.query_pos, rc.gallery_pos);
    for (int r = 0; r < rc.dist.d_B.rows; ++r)
        for (int c = 0; c < rc.dist.d_B.cols; ++c)
            rc.dist.d_B.values[static_cast<size_t>(r) * rc.dist.d_B.cols + c] =
                rc.d_A_union.at(rc.gallery_pos[c], rc.query_pos[r]);

    {
        // Route C reuses the aggregation on the d_A graph; its edge weights
        // are -d_A clamped into [-1,1], the natural similarity of that space.
        Eigen::Map<const MatrixXdR> da(rc.d_A_union.values.data(), n, n);
        MatrixXdR e_a = (-da.array()).cwiseMin(1.0).cwiseMax(-1.0).matrix();
        MatrixXdR h_a = normalize_rows(encode(indicator_matrix(rc.d_A_union, k), e_a), "h_A");
        DistanceMatrix d_c_full = negative_cosine(select_rows(h_a, rc.query_pos),
                                                  select_rows(h_re, rc.gallery_pos),
                                                  rc.query_pos, rc.gallery_pos);
        rc.dist.d_C = std::move(d_c_full);
    }

    {
        DistanceMatrix D_o = cosine_distance_matrix(space_view(bundle, Space::Original),
                                                    space_view(bundle, Space::Original));
        rc.dist.d_direct = D_o.slice(rc.query_pos, rc.gallery_pos);
        MatrixXdR h_o = normalize_rows(
            encode(indicator_matrix(D_o, k), similarity_from_distance(D_o)), "h_o");
        rc.dist.d_o = negative_cosine(select_rows(h_o, rc.query_pos),
                                      select_rows(h_o, rc.gallery_pos), rc.query_pos,
                                      rc.gallery_pos);
    }
    return rc;
}

}  // namespace faim
