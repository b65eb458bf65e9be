#include "faim/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "faim/errors.hpp"

namespace faim::oracle {

namespace {

double clamp1(double v) { return std::min(1.0, std::max(-1.0, v)); }

double dot_f32(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * b[i];
    return acc;
}

std::vector<int> iota_ids(int n) {
    std::vector<int> ids(n);
    for (int i = 0; i < n; ++i) ids[i] = i;
    return ids;
}

EmbeddingBundle normalize_naive(const EmbeddingBundle& bundle) {
    auto scale_space = [&](Space s, const char* name) {
        const int d = bundle.dim(s);
        std::vector<float> out(bundle.feature_matrix(s));
        for (int i = 0; i < bundle.size(); ++i) {
            float* row = out.data() + static_cast<size_t>(i) * d;
            double norm_sq = 0.0;
            for (int j = 0; j < d; ++j) norm_sq += static_cast<double>(row[j]) * row[j];
            const double norm = std::sqrt(norm_sq);
            if (norm < 1e-12) throw ZeroVectorError(i, name);
            const double inv = 1.0 / norm;
            for (int j = 0; j < d; ++j) row[j] = static_cast<float>(row[j] * inv);
        }
        return out;
    };
    return {bundle.metas(), bundle.dims(), scale_space(Space::Original, "f_o"),
            scale_space(Space::Irrelevant, "f_ir"), scale_space(Space::Relevant, "f_re"),
            bundle.reliability()};
}

std::set<int> reciprocal_at(const DistanceMatrix& dist, int probe, int k, bool expansion) {
    return expansion ? expanded_k_reciprocal_set_naive(dist, probe, k)
                     : k_reciprocal_set_naive(dist, probe, k);
}

// All reciprocal sets of one matrix, forward lists computed once. Same
// definitions as the per-probe functions, restated with plain scans.
std::vector<std::set<int>> reciprocal_sets_all(const DistanceMatrix& dist, int k,
                                               bool expansion) {
    const int n = dist.rows;
    auto mutual_for = [&](int kk) {
        std::vector<std::vector<int>> forward(n);
        for (int i = 0; i < n; ++i) forward[i] = top_k_naive(dist, i, kk, true);
        std::vector<std::set<int>> sets(n);
        for (int i = 0; i < n; ++i)
            for (int j : forward[i])
                if (std::find(forward[j].begin(), forward[j].end(), i) != forward[j].end())
                    sets[i].insert(j);
        return sets;
    };
    std::vector<std::set<int>> base = mutual_for(k);
    if (!expansion) return base;
    std::vector<std::set<int>> half = mutual_for(std::max(1, k / 2));
    std::vector<std::set<int>> out(n);
    for (int i = 0; i < n; ++i) {
        out[i] = base[i];
        for (int q : base[i]) {
            if (half[q].empty()) continue;
            std::vector<int> inter;
            std::set_intersection(base[i].begin(), base[i].end(), half[q].begin(), half[q].end(),
                                  std::back_inserter(inter));
            if (3 * inter.size() >= 2 * half[q].size()) out[i].insert(half[q].begin(), half[q].end());
        }
        out[i].erase(i);
    }
    return out;
}

// g rows of the mutual-neighbor graph of one square distance matrix.
std::vector<std::vector<double>> indicator_naive(const DistanceMatrix& dist, int k) {
    const int n = dist.rows;
    std::vector<std::set<int>> nn(n);
    for (int i = 0; i < n; ++i) {
        auto top = top_k_naive(dist, i, k, true);
        nn[i] = std::set<int>(top.begin(), top.end());
    }
    std::vector<std::vector<double>> g(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) {
                g[i][j] = 1.0;
                continue;
            }
            const bool fwd = nn[i].count(j) > 0;
            const bool rev = nn[j].count(i) > 0;
            if (fwd && rev)
                g[i][j] = 1.0;
            else if (fwd || rev)
                g[i][j] = 0.5;
        }
    return g;
}

// h_i = g_i + sum_{j != i} e_ij^2 g_j, rows then scaled to unit norm.
std::vector<std::vector<double>> encoded_naive(const std::vector<std::vector<double>>& g,
                                               const std::vector<std::vector<double>>& e,
                                               const char* which) {
    const int n = static_cast<int>(g.size());
    std::vector<std::vector<double>> h(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < n; ++c) h[i][c] = g[i][c];
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double w = e[i][j] * e[i][j];
            for (int c = 0; c < n; ++c) h[i][c] += w * g[j][c];
        }
        double norm_sq = 0.0;
        for (double v : h[i]) norm_sq += v * v;
        const double norm = std::sqrt(norm_sq);
        if (norm < 1e-12) throw ZeroVectorError(i, which);
        for (double& v : h[i]) v /= norm;
    }
    return h;
}

std::vector<std::vector<double>> edge_similarity_naive(const DistanceMatrix& dist) {
    std::vector<std::vector<double>> e(dist.rows, std::vector<double>(dist.cols, 0.0));
    for (int i = 0; i < dist.rows; ++i)
        for (int j = 0; j < dist.cols; ++j) e[i][j] = clamp1(1.0 - dist.at(i, j));
    return e;
}

double unit_value_naive(double raw, ImMode mode) {
    return mode == ImMode::Gnn ? (raw + 1.0) / 2.0 : raw;
}

void check_same_shape(const DistanceMatrix& a, const DistanceMatrix& b, const std::string& stage) {
    if (a.rows != b.rows || a.cols != b.cols || a.row_ids != b.row_ids || a.col_ids != b.col_ids)
        throw ShapeMismatch("compare stage '" + stage + "': shapes or ids disagree");
}

}  // namespace

DistanceMatrix cosine_matrix_naive(const EmbeddingBundle& bundle, Space space) {
    const int n = bundle.size();
    DistanceMatrix out = DistanceMatrix::zeros(iota_ids(n), iota_ids(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out.values[static_cast<size_t>(i) * n + j] =
                1.0 - clamp1(dot_f32(bundle.feature(space, i), bundle.feature(space, j)));
    return out;
}

std::vector<int> top_k_naive(const DistanceMatrix& dist, int row, int k, bool exclude_self) {
    std::vector<std::pair<double, int>> cand;
    for (int c = 0; c < dist.cols; ++c) {
        if (exclude_self && dist.col_ids[c] == dist.row_ids[row]) continue;
        cand.emplace_back(dist.at(row, c), c);
    }
    std::sort(cand.begin(), cand.end());
    const int take = std::min<int>(k, static_cast<int>(cand.size()));
    std::vector<int> out;
    for (int i = 0; i < take; ++i) out.push_back(cand[i].second);
    return out;
}

std::set<int> k_reciprocal_set_naive(const DistanceMatrix& dist, int probe, int k) {
    auto forward = top_k_naive(dist, probe, k, true);
    std::set<int> out;
    for (int j : forward) {
        auto back = top_k_naive(dist, j, k, true);
        if (std::find(back.begin(), back.end(), probe) != back.end()) out.insert(j);
    }
    return out;
}

std::set<int> expanded_k_reciprocal_set_naive(const DistanceMatrix& dist, int probe, int k) {
    const int half = std::max(1, k / 2);
    std::set<int> base = k_reciprocal_set_naive(dist, probe, k);
    std::set<int> out = base;
    for (int q : base) {
        std::set<int> hq = k_reciprocal_set_naive(dist, q, half);
        if (hq.empty()) continue;
        std::vector<int> inter;
        std::set_intersection(base.begin(), base.end(), hq.begin(), hq.end(),
                              std::back_inserter(inter));
        if (3 * inter.size() >= 2 * hq.size()) out.insert(hq.begin(), hq.end());
    }
    out.erase(probe);
    return out;
}

double jaccard_naive(const std::set<int>& a, const std::set<int>& b) {
    std::vector<int> inter;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
    const size_t uni = a.size() + b.size() - inter.size();
    if (uni == 0) return 1.0;
    return 1.0 - static_cast<double>(inter.size()) / static_cast<double>(uni);
}

NaiveRoutes route_distances_naive(const EmbeddingBundle& bundle, int k, ImMode mode,
                                  bool kr_expansion) {
    const int n = bundle.size();
    const auto queries = bundle.query_ids();
    const auto galleries = bundle.gallery_ids();
    const int nq = static_cast<int>(queries.size());
    const int ng = static_cast<int>(galleries.size());

    NaiveRoutes out;
    out.dist.mode = mode;
    out.k = k;
    out.expansion = kr_expansion;
    out.D_re = cosine_matrix_naive(bundle, Space::Relevant);
    out.D_ir = cosine_matrix_naive(bundle, Space::Irrelevant);
    DistanceMatrix D_o = cosine_matrix_naive(bundle, Space::Original);

    out.dist.d_A = DistanceMatrix::zeros(queries, galleries);
    out.dist.d_B = DistanceMatrix::zeros(queries, galleries);
    out.dist.d_C = DistanceMatrix::zeros(queries, galleries);
    out.dist.d_o = DistanceMatrix::zeros(queries, galleries);
    out.dist.d_direct = DistanceMatrix::zeros(queries, galleries);
    out.d_A_union = DistanceMatrix::zeros(iota_ids(n), iota_ids(n));

    for (int r = 0; r < nq; ++r)
        for (int c = 0; c < ng; ++c)
            out.dist.d_direct.values[static_cast<size_t>(r) * ng + c] =
                D_o.at(queries[r], galleries[c]);

    if (mode == ImMode::KReciprocal) {
        const auto r_re = reciprocal_sets_all(out.D_re, k, kr_expansion);
        const auto r_ir = reciprocal_sets_all(out.D_ir, k, kr_expansion);
        const auto r_o = reciprocal_sets_all(D_o, k, kr_expansion);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                out.d_A_union.values[static_cast<size_t>(i) * n + j] =
                    jaccard_naive(r_re[i], r_ir[j]);

        const auto r_a = reciprocal_sets_all(out.d_A_union, k, kr_expansion);

        for (int r = 0; r < nq; ++r)
            for (int c = 0; c < ng; ++c) {
                const int q = queries[r];
                const int t = galleries[c];
                const size_t idx = static_cast<size_t>(r) * ng + c;
                out.dist.d_A.values[idx] = jaccard_naive(r_re[q], r_ir[t]);
                out.dist.d_B.values[idx] = jaccard_naive(r_ir[q], r_re[t]);
                out.dist.d_C.values[idx] = jaccard_naive(r_a[q], r_re[t]);
                out.dist.d_o.values[idx] = jaccard_naive(r_o[q], r_o[t]);
            }
        return out;
    }

    auto h_re = encoded_naive(indicator_naive(out.D_re, k), edge_similarity_naive(out.D_re), "h_re");
    auto h_ir = encoded_naive(indicator_naive(out.D_ir, k), edge_similarity_naive(out.D_ir), "h_ir");
    auto h_o = encoded_naive(indicator_naive(D_o, k), edge_similarity_naive(D_o), "h_o");

    auto neg_cos = [](const std::vector<double>& a, const std::vector<double>& b) {
        double acc = 0.0;
        for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
        return -clamp1(acc);
    };

    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out.d_A_union.values[static_cast<size_t>(i) * n + j] = neg_cos(h_re[i], h_ir[j]);

    std::vector<std::vector<double>> e_a(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) e_a[i][j] = clamp1(-out.d_A_union.at(i, j));
    auto h_a = encoded_naive(indicator_naive(out.d_A_union, k), e_a, "h_A");

    for (int r = 0; r < nq; ++r)
        for (int c = 0; c < ng; ++c) {
            const int q = queries[r];
            const int t = galleries[c];
            const size_t idx = static_cast<size_t>(r) * ng + c;
            out.dist.d_A.values[idx] = neg_cos(h_re[q], h_ir[t]);
            out.dist.d_B.values[idx] = neg_cos(h_ir[q], h_re[t]);
            out.dist.d_C.values[idx] = neg_cos(h_a[q], h_re[t]);
            out.dist.d_o.values[idx] = neg_cos(h_o[q], h_o[t]);
        }
    return out;
}

std::vector<std::vector<int>> intermediaries_naive(const NaiveRoutes& routes,
                                                   const EmbeddingBundle& bundle, RouteId route,
                                                   int m) {
    const auto queries = bundle.query_ids();
    const bool kr = routes.dist.mode == ImMode::KReciprocal;
    std::vector<std::vector<int>> out;
    out.reserve(queries.size());
    for (int q : queries) {
        std::vector<int> members;
        if (route == RouteId::C) {
            members = top_k_naive(routes.d_A_union, q, m, true);
        } else {
            const DistanceMatrix& first = route == RouteId::A ? routes.D_re : routes.D_ir;
            if (kr) {
                std::set<int> recip = reciprocal_at(first, q, routes.k, routes.expansion);
                members.assign(recip.begin(), recip.end());
                std::sort(members.begin(), members.end(), [&](int a, int b) {
                    if (first.at(q, a) != first.at(q, b)) return first.at(q, a) < first.at(q, b);
                    return a < b;
                });
                if (static_cast<int>(members.size()) > m) members.resize(m);
            } else {
                members = top_k_naive(first, q, m, true);
            }
        }
        out.push_back(std::move(members));
    }
    return out;
}

FeasibilityWeights feasibility_naive(const EmbeddingBundle& bundle, const NaiveRoutes& routes,
                                     int m) {
    const auto queries = bundle.query_ids();
    const auto galleries = bundle.gallery_ids();
    const int nq = static_cast<int>(queries.size());
    const int ng = static_cast<int>(galleries.size());
    const ImMode mode = routes.dist.mode;

    const auto set_a = intermediaries_naive(routes, bundle, RouteId::A, m);
    const auto set_b = intermediaries_naive(routes, bundle, RouteId::B, m);
    const auto set_c = intermediaries_naive(routes, bundle, RouteId::C, m);

    FeasibilityWeights w;
    w.s_A = DistanceMatrix::zeros(queries, galleries);
    w.s_B = DistanceMatrix::zeros(queries, galleries);
    w.s_C = DistanceMatrix::zeros(queries, galleries);
    w.lambda_o = DistanceMatrix::zeros(queries, galleries);

    auto sim = [](double d) { return 1.0 - d / 2.0; };

    for (int r = 0; r < nq; ++r) {
        const int q = queries[r];
        for (int c = 0; c < ng; ++c) {
            const int t = galleries[c];
            const size_t idx = static_cast<size_t>(r) * ng + c;

            double s_a = 0.0;
            for (int i : set_a[r])
                s_a += sim(routes.D_re.at(q, i)) * sim(routes.D_ir.at(i, t)) * bundle.reliability(i);
            if (!set_a[r].empty()) s_a /= set_a[r].size();

            double s_b = 0.0;
            for (int i : set_b[r])
                s_b += sim(routes.D_ir.at(q, i)) * sim(routes.D_re.at(i, t)) * bundle.reliability(i);
            if (!set_b[r].empty()) s_b /= set_b[r].size();

            double s_c = 0.0;
            for (int i : set_c[r])
                s_c += (1.0 - unit_value_naive(routes.d_A_union.at(q, i), mode)) *
                       sim(routes.D_re.at(i, t)) * bundle.reliability(i);
            if (!set_c[r].empty()) s_c /= set_c[r].size();

            w.s_A.values[idx] = s_a;
            w.s_B.values[idx] = s_b;
            w.s_C.values[idx] = s_c;
            w.lambda_o.values[idx] = 1.0 - (s_a + s_b + s_c) / 3.0;
        }
    }
    return w;
}

DistanceMatrix fuse_naive(const RouteDistances& unit_routes, const FeasibilityWeights& weights) {
    check_same_shape(unit_routes.d_A, unit_routes.d_B, "fuse:d_B");
    check_same_shape(unit_routes.d_A, unit_routes.d_C, "fuse:d_C");
    check_same_shape(unit_routes.d_A, unit_routes.d_direct, "fuse:d_direct");
    check_same_shape(unit_routes.d_A, unit_routes.d_o, "fuse:d_o");
    check_same_shape(unit_routes.d_A, weights.s_A, "fuse:s_A");
    DistanceMatrix out = DistanceMatrix::zeros(unit_routes.d_A.row_ids, unit_routes.d_A.col_ids);
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c) {
            const size_t idx = static_cast<size_t>(r) * out.cols + c;
            out.values[idx] =
                weights.s_A.values[idx] * unit_routes.d_A.values[idx] +
                weights.s_B.values[idx] * unit_routes.d_B.values[idx] +
                weights.s_C.values[idx] * unit_routes.d_C.values[idx] +
                weights.lambda_o.values[idx] *
                    (unit_routes.d_direct.values[idx] + unit_routes.d_o.values[idx]);
        }
    return out;
}

NaiveRerank rerank_naive(const EmbeddingBundle& bundle, const RerankOptions& options) {
    EmbeddingBundle normalized = normalize_naive(bundle);
    NaiveRoutes routes =
        route_distances_naive(normalized, options.k, options.mode, options.kr_expansion);

    NaiveRerank out;
    out.raw = routes.dist;
    out.unit = routes.dist;
    if (options.mode == ImMode::Gnn) {
        for (DistanceMatrix* m : {&out.unit.d_A, &out.unit.d_B, &out.unit.d_C, &out.unit.d_o})
            for (double& v : m->values) v = (v + 1.0) / 2.0;
    }
    if (options.rescale_direct)
        for (double& v : out.unit.d_direct.values) v /= 2.0;

    if (options.dynamic_weights) {
        out.weights = feasibility_naive(normalized, routes, options.m_intermediaries);
    } else {
        const auto queries = normalized.query_ids();
        const auto galleries = normalized.gallery_ids();
        out.weights.s_A = DistanceMatrix::zeros(queries, galleries);
        out.weights.s_B = DistanceMatrix::zeros(queries, galleries);
        out.weights.s_C = DistanceMatrix::zeros(queries, galleries);
        out.weights.lambda_o = DistanceMatrix::zeros(queries, galleries);
        const double lambda = 1.0 - (options.fixed_a + options.fixed_b + options.fixed_c) / 3.0;
        for (auto& v : out.weights.s_A.values) v = options.fixed_a;
        for (auto& v : out.weights.s_B.values) v = options.fixed_b;
        for (auto& v : out.weights.s_C.values) v = options.fixed_c;
        for (auto& v : out.weights.lambda_o.values) v = lambda;
    }
    out.d_star = fuse_naive(out.unit, out.weights);
    return out;
}

EvalReport evaluate_naive(const EmbeddingBundle& bundle, const DistanceMatrix& distances,
                          EvalSetting setting, const EvalOptions& options) {
    const auto queries = bundle.query_ids();
    const auto galleries = bundle.gallery_ids();
    if (distances.row_ids != queries || distances.col_ids != galleries)
        throw ShapeMismatch("naive evaluation: distance matrix does not cover the bundle");

    EvalReport report;
    report.setting = setting;
    report.ks = options.cmc_ks;
    report.top_k.assign(options.cmc_ks.size(), 0.0);
    double map_total = 0.0;

    for (size_t r = 0; r < queries.size(); ++r) {
        const SampleMeta& q = bundle.meta(queries[r]);
        std::vector<std::pair<double, int>> ranked;
        int n_pos = 0;
        for (size_t c = 0; c < galleries.size(); ++c) {
            const SampleMeta& g = bundle.meta(galleries[c]);
            bool keep = true;
            if (g.identity == q.identity) {
                if (options.same_camera_rule && g.camera == q.camera) keep = false;
                if (setting == EvalSetting::SameClothes && g.clothes != q.clothes) keep = false;
                if (setting == EvalSetting::ClothesChanging && g.clothes == q.clothes) keep = false;
            }
            if (!keep) continue;
            ranked.emplace_back(distances.at(static_cast<int>(r), static_cast<int>(c)),
                                static_cast<int>(c));
            if (bundle.meta(galleries[c]).identity == q.identity) ++n_pos;
        }
        if (n_pos == 0) {
            ++report.n_queries_dropped;
            continue;
        }
        std::sort(ranked.begin(), ranked.end());

        int found = 0, first = 0;
        double ap = 0.0;
        for (size_t rank = 0; rank < ranked.size(); ++rank) {
            const SampleMeta& g = bundle.meta(galleries[ranked[rank].second]);
            if (g.identity == q.identity) {
                ++found;
                ap += static_cast<double>(found) / static_cast<double>(rank + 1);
                if (first == 0) first = static_cast<int>(rank) + 1;
            }
        }
        map_total += ap / n_pos;
        for (size_t ki = 0; ki < report.ks.size(); ++ki)
            if (first != 0 && first <= report.ks[ki]) report.top_k[ki] += 1.0;
        ++report.n_queries_evaluated;
    }
    if (report.n_queries_evaluated == 0) throw NoEvaluableQueries("every query was dropped: no positives after masking");
    for (double& h : report.top_k) h /= report.n_queries_evaluated;
    report.map = map_total / report.n_queries_evaluated;
    return report;
}

DiffReport compare(const DistanceMatrix& reference, const DistanceMatrix& optimized,
                   double tolerance, const std::string& stage) {
    check_same_shape(reference, optimized, stage.empty() ? "compare" : stage);
    DiffReport report;
    report.stage = stage;
    report.tolerance = tolerance;
    for (int r = 0; r < reference.rows; ++r)
        for (int c = 0; c < reference.cols; ++c) {
            const double diff = std::abs(reference.at(r, c) - optimized.at(r, c));
            if (diff > report.max_abs_diff) {
                report.max_abs_diff = diff;
                report.row = r;
                report.col = c;
            }
        }
    report.pass = report.max_abs_diff <= tolerance;
    return report;
}

DiffReport compare_rerank(const NaiveRerank& reference, const RerankOutput& optimized,
                          double tolerance) {
    DiffReport worst;
    worst.tolerance = tolerance;
    worst.stage = "empty";
    const std::pair<const DistanceMatrix*, const DistanceMatrix*> pairs[] = {
        {&reference.raw.d_A, &optimized.raw.d_A},
        {&reference.raw.d_B, &optimized.raw.d_B},
        {&reference.raw.d_C, &optimized.raw.d_C},
        {&reference.raw.d_direct, &optimized.raw.d_direct},
        {&reference.raw.d_o, &optimized.raw.d_o},
        {&reference.unit.d_A, &optimized.unit.d_A},
        {&reference.unit.d_B, &optimized.unit.d_B},
        {&reference.unit.d_C, &optimized.unit.d_C},
        {&reference.unit.d_direct, &optimized.unit.d_direct},
        {&reference.unit.d_o, &optimized.unit.d_o},
        {&reference.weights.s_A, &optimized.weights.s_A},
        {&reference.weights.s_B, &optimized.weights.s_B},
        {&reference.weights.s_C, &optimized.weights.s_C},
        {&reference.weights.lambda_o, &optimized.weights.lambda_o},
        {&reference.d_star, &optimized.d_star},
    };
    const char* names[] = {"raw:d_A", "raw:d_B", "raw:d_C", "raw:d_direct", "raw:d_o",
                           "d_A",     "d_B",     "d_C",     "d_direct",     "d_o",
                           "s_A",     "s_B",     "s_C",     "lambda_o",     "d_star"};
    bool first = true;
    for (size_t i = 0; i < std::size(pairs); ++i) {
        DiffReport stage = compare(*pairs[i].first, *pairs[i].second, tolerance, names[i]);
        if (first || stage.max_abs_diff > worst.max_abs_diff) {
            worst = stage;
            first = false;
        }
    }
    return worst;
}

}  // namespace faim::oracle
