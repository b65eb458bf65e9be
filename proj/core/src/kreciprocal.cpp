#include "faim/kreciprocal.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>

#include "faim/errors.hpp"
#include "faim/parallel.hpp"

namespace faim {

namespace {

// Row-per-owner bit matrix for O(1) membership probes.
class MemberBits {
public:
    MemberBits(int owners, int universe)
        : words_per_row_((universe + 63) / 64), bits_(static_cast<size_t>(owners) * words_per_row_, 0) {}

    void set(int owner, int member) {
        bits_[static_cast<size_t>(owner) * words_per_row_ + member / 64] |= (uint64_t{1} << (member % 64));
    }

    bool test(int owner, int member) const {
        return (bits_[static_cast<size_t>(owner) * words_per_row_ + member / 64] >> (member % 64)) & 1u;
    }

private:
    size_t words_per_row_;
    std::vector<uint64_t> bits_;
};

void require_square(const DistanceMatrix& dist) {
    if (dist.rows != dist.cols)
        throw ShapeMismatch("reciprocal sets need a square distance matrix, got " +
                            std::to_string(dist.rows) + "x" + std::to_string(dist.cols));
    if (dist.row_ids != dist.col_ids)
        throw ShapeMismatch("reciprocal sets need matching row and column ids");
}

// Mutual-kNN sets in row-position space, before any expansion.
std::vector<std::vector<int>> mutual_sets(const DistanceMatrix& dist, int k) {
    const int n = dist.rows;
    auto nn = top_k_neighbors(dist, k, /*exclude_self=*/true);
    MemberBits bits(n, n);
    for (int i = 0; i < n; ++i)
        for (int j : nn[i]) bits.set(i, j);
    std::vector<std::vector<int>> out(n);
    for (int i = 0; i < n; ++i) {
        out[i].reserve(nn[i].size());
        for (int j : nn[i])
            if (bits.test(j, i)) out[i].push_back(j);
        std::sort(out[i].begin(), out[i].end());
    }
    return out;
}

size_t sorted_intersection_size(const std::vector<int>& a, const std::vector<int>& b) {
    size_t count = 0, ia = 0, ib = 0;
    while (ia < a.size() && ib < b.size()) {
        if (a[ia] < b[ib]) {
            ++ia;
        } else if (b[ib] < a[ia]) {
            ++ib;
        } else {
            ++count;
            ++ia;
            ++ib;
        }
    }
    return count;
}

std::vector<std::vector<int>> expanded_sets(const DistanceMatrix& dist, int k) {
    auto base = mutual_sets(dist, k);
    auto half = mutual_sets(dist, std::max(1, k / 2));
    const int n = dist.rows;
    std::vector<std::vector<int>> out(n);
    for (int i = 0; i < n; ++i) {
        std::vector<int> acc = base[i];
        for (int q : base[i]) {
            const auto& hq = half[q];
            if (hq.empty()) continue;
            if (3 * sorted_intersection_size(base[i], hq) >= 2 * hq.size())
                acc.insert(acc.end(), hq.begin(), hq.end());
        }
        std::sort(acc.begin(), acc.end());
        acc.erase(std::unique(acc.begin(), acc.end()), acc.end());
        acc.erase(std::remove(acc.begin(), acc.end(), i), acc.end());
        out[i] = std::move(acc);
    }
    return out;
}

std::vector<int> iota_ids(int n) {
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

// out(r, c) = jaccard(row_sets[row_pos[r]], col_sets[col_pos[c]]).
// Set members are union positions in [0, n_union).
DistanceMatrix jaccard_matrix(const std::vector<std::vector<int>>& row_sets,
                              const std::vector<int>& row_pos,
                              const std::vector<std::vector<int>>& col_sets,
                              const std::vector<int>& col_pos, int n_union,
                              std::vector<int> row_ids, std::vector<int> col_ids, int threads) {
    const int rows = static_cast<int>(row_pos.size());
    const int cols = static_cast<int>(col_pos.size());
    DistanceMatrix out = DistanceMatrix::zeros(std::move(row_ids), std::move(col_ids));
    MemberBits col_bits(cols, n_union);
    for (int c = 0; c < cols; ++c)
        for (int m : col_sets[col_pos[c]]) col_bits.set(c, m);

    parallel_chunks(rows, threads, [&](int begin, int end) {
        for (int r = begin; r < end; ++r) {
            const auto& a = row_sets[row_pos[r]];
            double* out_row = out.values.data() + static_cast<size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) {
                const auto& b = col_sets[col_pos[c]];
                size_t inter = 0;
                for (int m : a)
                    if (col_bits.test(c, m)) ++inter;
                const size_t uni = a.size() + b.size() - inter;
                out_row[c] = uni == 0 ? 1.0 : 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
            }
        }
    });
    return out;
}

}  // namespace

ReciprocalSet k_reciprocal_set(const DistanceMatrix& dist, int probe_id, int k) {
    require_square(dist);
    auto it = std::find(dist.row_ids.begin(), dist.row_ids.end(), probe_id);
    if (it == dist.row_ids.end())
        throw OutOfRange("probe id " + std::to_string(probe_id) + " not present in distance matrix");
    const int pos = static_cast<int>(it - dist.row_ids.begin());
    auto sets = mutual_sets(dist, k);
    ReciprocalSet out;
    out.probe_id = probe_id;
    out.k = k;
    out.members.reserve(sets[pos].size());
    for (int p : sets[pos]) out.members.push_back(dist.row_ids[p]);
    std::sort(out.members.begin(), out.members.end());
    return out;
}

ReciprocalSet expanded_k_reciprocal_set(const DistanceMatrix& dist, int probe_id, int k) {
    require_square(dist);
    auto it = std::find(dist.row_ids.begin(), dist.row_ids.end(), probe_id);
    if (it == dist.row_ids.end())
        throw OutOfRange("probe id " + std::to_string(probe_id) + " not present in distance matrix");
    const int pos = static_cast<int>(it - dist.row_ids.begin());
    auto sets = expanded_sets(dist, k);
    ReciprocalSet out;
    out.probe_id = probe_id;
    out.k = k;
    out.members.reserve(sets[pos].size());
    for (int p : sets[pos]) out.members.push_back(dist.row_ids[p]);
    std::sort(out.members.begin(), out.members.end());
    return out;
}

double jaccard_distance(const std::vector<int>& a, const std::vector<int>& b) {
    const size_t inter = sorted_intersection_size(a, b);
    const size_t uni = a.size() + b.size() - inter;
    if (uni == 0) return 1.0;
    return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::vector<int>> all_k_reciprocal_sets(const DistanceMatrix& dist, int k,
                                                    bool expansion) {
    require_square(dist);
    return expansion ? expanded_sets(dist, k) : mutual_sets(dist, k);
}

RouteComputation route_distances_kr(const EmbeddingBundle& bundle, int k,
                                    const KrOptions& options) {
    const int n = bundle.size();
    const int threads = options.threads > 0 ? options.threads : default_thread_count();
    const auto all = iota_ids(n);

    RouteComputation rc;
    rc.k = k;
    rc.query_pos = bundle.query_ids();
    rc.gallery_pos = bundle.gallery_ids();
    rc.dist.mode = ImMode::KReciprocal;

    std::vector<std::vector<int>> recip_o;
    {
        DistanceMatrix D_o = cosine_distance_matrix(space_view(bundle, Space::Original),
                                                    space_view(bundle, Space::Original));
        recip_o = all_k_reciprocal_sets(D_o, k, options.expansion);
        rc.dist.d_direct = D_o.slice(rc.query_pos, rc.gallery_pos);
    }
    rc.dist.d_o = jaccard_matrix(recip_o, rc.query_pos, recip_o, rc.gallery_pos, n,
                                 rc.query_pos, rc.gallery_pos, threads);
    recip_o.clear();
    recip_o.shrink_to_fit();

    rc.D_re = cosine_distance_matrix(space_view(bundle, Space::Relevant),
                                     space_view(bundle, Space::Relevant));
    rc.D_ir = cosine_distance_matrix(space_view(bundle, Space::Irrelevant),
                                     space_view(bundle, Space::Irrelevant));
    rc.recip_re = all_k_reciprocal_sets(rc.D_re, k, options.expansion);
    rc.recip_ir = all_k_reciprocal_sets(rc.D_ir, k, options.expansion);

    rc.d_A_union = jaccard_matrix(rc.recip_re, all, rc.recip_ir, all, n, all, all, threads);
    rc.dist.d_A = rc.d_A_union.slice(rc.query_pos, rc.gallery_pos);

    // d_B(q, t) = jaccard(R_ir(q), R_re(t)) = d_A_union(t, q).
    rc.dist.d_B = DistanceMatrix::zeros(rc.query_pos, rc.gallery_pos);
    for (int r = 0; r < rc.dist.d_B.rows; ++r)
        for (int c = 0; c < rc.dist.d_B.cols; ++c)
            rc.dist.d_B.values[static_cast<size_t>(r) * rc.dist.d_B.cols + c] =
                rc.d_A_union.at(rc.gallery_pos[c], rc.query_pos[r]);

    auto recip_A = all_k_reciprocal_sets(rc.d_A_union, k, options.expansion);
    rc.dist.d_C = jaccard_matrix(recip_A, rc.query_pos, rc.recip_re, rc.gallery_pos, n,
                                 rc.query_pos, rc.gallery_pos, threads);
    return rc;
}

}  // namespace faim
