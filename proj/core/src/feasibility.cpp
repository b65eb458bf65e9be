#include "faim/feasibility.hpp"

#include <algorithm>
#include <cmath>

#include "faim/errors.hpp"
#include "faim/parallel.hpp"

namespace faim {

namespace {

double scaled_sim_from_distance(double d) { return 1.0 - d / 2.0; }

// Positions of the m nearest columns of one square-matrix row, self excluded,
// ties broken by ascending position.
std::vector<int> top_m_row(const DistanceMatrix& dist, int row, int m) {
    const double* values = dist.values.data() + static_cast<size_t>(row) * dist.cols;
    std::vector<int> order;
    order.reserve(dist.cols);
    for (int c = 0; c < dist.cols; ++c)
        if (dist.col_ids[c] != dist.row_ids[row]) order.push_back(c);
    const int take = std::min<int>(m, static_cast<int>(order.size()));
    std::partial_sort(order.begin(), order.begin() + take, order.end(), [&](int a, int b) {
        if (values[a] != values[b]) return values[a] < values[b];
        return a < b;
    });
    order.resize(take);
    return order;
}

std::vector<int> reciprocal_members_by_distance(const std::vector<int>& members,
                                                const DistanceMatrix& dist, int row, int m) {
    const double* values = dist.values.data() + static_cast<size_t>(row) * dist.cols;
    std::vector<int> order = members;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (values[a] != values[b]) return values[a] < values[b];
        return a < b;
    });
    if (static_cast<int>(order.size()) > m) order.resize(m);
    return order;
}

IntermediarySet make_set(RouteId route, int query_id, std::vector<int> members,
                         std::string source) {
    IntermediarySet out;
    out.query_id = query_id;
    out.route = route;
    out.members = std::move(members);
    out.source = std::move(source);
    out.degenerate = out.members.empty();
    return out;
}

void require_same_shape(const DistanceMatrix& a, const DistanceMatrix& b, const char* what) {
    if (a.rows != b.rows || a.cols != b.cols || a.row_ids != b.row_ids || a.col_ids != b.col_ids)
        throw ShapeMismatch(std::string("fusion input ") + what + " disagrees on shape or ids");
}

}  // namespace

IntermediarySet intermediary_set(RouteId route, int query_id, const RouteComputation& rc, int m) {
    if (m <= 0) throw OutOfRange("intermediary count must be positive, got " + std::to_string(m));
    const bool kr = rc.dist.mode == ImMode::KReciprocal;
    switch (route) {
        case RouteId::A:
            if (kr)
                return make_set(route, query_id,
                                reciprocal_members_by_distance(rc.recip_re[query_id], rc.D_re,
                                                               query_id, m),
                                "reciprocal:f_re");
            return make_set(route, query_id, top_m_row(rc.D_re, query_id, m), "knn:f_re");
        case RouteId::B:
            if (kr)
                return make_set(route, query_id,
                                reciprocal_members_by_distance(rc.recip_ir[query_id], rc.D_ir,
                                                               query_id, m),
                                "reciprocal:f_ir");
            return make_set(route, query_id, top_m_row(rc.D_ir, query_id, m), "knn:f_ir");
        case RouteId::C:
            return make_set(route, query_id, top_m_row(rc.d_A_union, query_id, m), "knn:d_A");
    }
    throw OutOfRange("unknown route");
}

std::vector<IntermediarySet> route_intermediaries(RouteId route, const RouteComputation& rc,
                                                  int m) {
    std::vector<IntermediarySet> out;
    out.reserve(rc.query_pos.size());
    for (int q : rc.query_pos) out.push_back(intermediary_set(route, q, rc, m));
    return out;
}

FeasibilityWeights feasibility_scores(const EmbeddingBundle& bundle, const RouteComputation& rc,
                                      const std::vector<IntermediarySet>& set_a,
                                      const std::vector<IntermediarySet>& set_b,
                                      const std::vector<IntermediarySet>& set_c, int threads) {
    const int n_threads = threads > 0 ? threads : default_thread_count();
    const int rows = static_cast<int>(rc.query_pos.size());
    const int cols = static_cast<int>(rc.gallery_pos.size());
    const ImMode mode = rc.dist.mode;

    FeasibilityWeights w;
    w.s_A = DistanceMatrix::zeros(rc.query_pos, rc.gallery_pos);
    w.s_B = DistanceMatrix::zeros(rc.query_pos, rc.gallery_pos);
    w.s_C = DistanceMatrix::zeros(rc.query_pos, rc.gallery_pos);
    w.lambda_o = DistanceMatrix::zeros(rc.query_pos, rc.gallery_pos);

    // first_hop(q, i) and second_hop(i, t) per route; the second hop is
    // gathered once per intermediary and accumulated into the output row.
    auto accumulate = [&](const IntermediarySet& set, int r, const DistanceMatrix& first,
                          bool first_is_route_a, const DistanceMatrix& second, double* out_row) {
        if (set.degenerate) return;
        const int q = rc.query_pos[r];
        const double inv = 1.0 / static_cast<double>(set.members.size());
        for (int i : set.members) {
            const double hop1 = first_is_route_a
                                    ? 1.0 - unit_route_value(first.at(q, i), mode)
                                    : scaled_sim_from_distance(first.at(q, i));
            const double weight = hop1 * bundle.reliability(i) * inv;
            const double* second_row = second.values.data() + static_cast<size_t>(i) * second.cols;
            for (int c = 0; c < cols; ++c)
                out_row[c] += weight * scaled_sim_from_distance(second_row[rc.gallery_pos[c]]);
        }
    };

    parallel_chunks(rows, n_threads, [&](int begin, int end) {
        for (int r = begin; r < end; ++r) {
            double* row_a = w.s_A.values.data() + static_cast<size_t>(r) * cols;
            double* row_b = w.s_B.values.data() + static_cast<size_t>(r) * cols;
            double* row_c = w.s_C.values.data() + static_cast<size_t>(r) * cols;
            double* row_l = w.lambda_o.values.data() + static_cast<size_t>(r) * cols;
            accumulate(set_a[r], r, rc.D_re, false, rc.D_ir, row_a);
            accumulate(set_b[r], r, rc.D_ir, false, rc.D_re, row_b);
            accumulate(set_c[r], r, rc.d_A_union, true, rc.D_re, row_c);
            for (int c = 0; c < cols; ++c)
                row_l[c] = 1.0 - (row_a[c] + row_b[c] + row_c[c]) / 3.0;
        }
    });
    return w;
}

FeasibilityWeights fixed_weight_mode(double s_a, double s_b, double s_c,
                                     std::vector<int> row_ids, std::vector<int> col_ids) {
    for (double v : {s_a, s_b, s_c})
        if (!(v >= 0.0 && v <= 1.0))
            throw OutOfRange("fixed route weight " + std::to_string(v) + " outside [0,1]");
    FeasibilityWeights w;
    w.s_A = DistanceMatrix::zeros(row_ids, col_ids);
    w.s_B = DistanceMatrix::zeros(row_ids, col_ids);
    w.s_C = DistanceMatrix::zeros(row_ids, col_ids);
    w.lambda_o = DistanceMatrix::zeros(std::move(row_ids), std::move(col_ids));
    const double lambda = 1.0 - (s_a + s_b + s_c) / 3.0;
    std::fill(w.s_A.values.begin(), w.s_A.values.end(), s_a);
    std::fill(w.s_B.values.begin(), w.s_B.values.end(), s_b);
    std::fill(w.s_C.values.begin(), w.s_C.values.end(), s_c);
    std::fill(w.lambda_o.values.begin(), w.lambda_o.values.end(), lambda);
    return w;
}

DistanceMatrix fuse_final_distance(const RouteDistances& unit_routes,
                                   const FeasibilityWeights& weights) {
    const DistanceMatrix& da = unit_routes.d_A;
    require_same_shape(da, unit_routes.d_B, "d_B");
    require_same_shape(da, unit_routes.d_C, "d_C");
    require_same_shape(da, unit_routes.d_direct, "d_direct");
    require_same_shape(da, unit_routes.d_o, "d_o");
    require_same_shape(da, weights.s_A, "s_A");
    require_same_shape(da, weights.s_B, "s_B");
    require_same_shape(da, weights.s_C, "s_C");
    require_same_shape(da, weights.lambda_o, "lambda_o");

    DistanceMatrix out = DistanceMatrix::zeros(da.row_ids, da.col_ids);
    const size_t total = out.values.size();
    for (size_t idx = 0; idx < total; ++idx) {
        out.values[idx] = weights.s_A.values[idx] * da.values[idx] +
                          weights.s_B.values[idx] * unit_routes.d_B.values[idx] +
                          weights.s_C.values[idx] * unit_routes.d_C.values[idx] +
                          weights.lambda_o.values[idx] *
                              (unit_routes.d_direct.values[idx] + unit_routes.d_o.values[idx]);
    }
    return out;
}

}  // namespace faim
