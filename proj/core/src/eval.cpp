#include "faim/eval.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "faim/errors.hpp"

namespace faim {

namespace {

bool is_positive_pair(const SampleMeta& query, const SampleMeta& g) {
    return g.identity == query.identity;
}

struct QueryOutcome {
    bool evaluated = false;
    int first_positive_rank = 0;  // 1-based
    double average_precision = 0.0;
};

}  // namespace

std::vector<char> gallery_mask(const SampleMeta& query, std::span<const SampleMeta> gallery,
                               EvalSetting setting, const EvalOptions& options) {
    std::vector<char> keep(gallery.size(), 1);
    for (size_t i = 0; i < gallery.size(); ++i) {
        const SampleMeta& g = gallery[i];
        if (g.identity != query.identity) continue;
        if (options.same_camera_rule && g.camera == query.camera) keep[i] = 0;
        if (setting == EvalSetting::SameClothes && g.clothes != query.clothes) keep[i] = 0;
        if (setting == EvalSetting::ClothesChanging && g.clothes == query.clothes) keep[i] = 0;
    }
    return keep;
}

std::vector<double> cmc_curve(const std::vector<std::vector<int>>& rank_lists,
                              const std::vector<std::vector<int>>& positives,
                              const std::vector<int>& ks) {
    if (rank_lists.size() != positives.size())
        throw ShapeMismatch("rank list count " + std::to_string(rank_lists.size()) +
                            " does not match positive set count " +
                            std::to_string(positives.size()));
    std::vector<double> hits(ks.size(), 0.0);
    int evaluated = 0;
    for (size_t q = 0; q < rank_lists.size(); ++q) {
        const auto& pos = positives[q];
        if (pos.empty()) continue;
        ++evaluated;
        int first = 0;
        for (size_t r = 0; r < rank_lists[q].size(); ++r)
            if (std::binary_search(pos.begin(), pos.end(), rank_lists[q][r])) {
                first = static_cast<int>(r) + 1;
                break;
            }
        if (first == 0) continue;
        for (size_t ki = 0; ki < ks.size(); ++ki)
            if (first <= ks[ki]) hits[ki] += 1.0;
    }
    if (evaluated == 0) throw NoEvaluableQueries("every query was dropped: no positives after masking");
    for (double& h : hits) h /= evaluated;
    return hits;
}

double mean_average_precision(const std::vector<std::vector<int>>& rank_lists,
                              const std::vector<std::vector<int>>& positives) {
    if (rank_lists.size() != positives.size())
        throw ShapeMismatch("rank list count " + std::to_string(rank_lists.size()) +
                            " does not match positive set count " +
                            std::to_string(positives.size()));
    double total = 0.0;
    int evaluated = 0;
    for (size_t q = 0; q < rank_lists.size(); ++q) {
        const auto& pos = positives[q];
        if (pos.empty()) continue;
        ++evaluated;
        double ap = 0.0;
        int found = 0;
        for (size_t r = 0; r < rank_lists[q].size(); ++r)
            if (std::binary_search(pos.begin(), pos.end(), rank_lists[q][r])) {
                ++found;
                ap += static_cast<double>(found) / static_cast<double>(r + 1);
            }
        ap /= static_cast<double>(pos.size());
        total += ap;
    }
    if (evaluated == 0) throw NoEvaluableQueries("every query was dropped: no positives after masking");
    return total / evaluated;
}

EvalReport evaluate(const EmbeddingBundle& bundle, const DistanceMatrix& distances,
                    EvalSetting setting, const EvalOptions& options) {
    const std::vector<int> query_ids = bundle.query_ids();
    const std::vector<int> gallery_ids = bundle.gallery_ids();
    if (distances.row_ids != query_ids || distances.col_ids != gallery_ids)
        throw ShapeMismatch("distance matrix rows/cols do not match the bundle's query and "
                            "gallery samples");

    std::vector<SampleMeta> gallery_metas;
    gallery_metas.reserve(gallery_ids.size());
    for (int id : gallery_ids) gallery_metas.push_back(bundle.meta(id));

    EvalReport report;
    report.setting = setting;
    report.ks = options.cmc_ks;
    report.top_k.assign(options.cmc_ks.size(), 0.0);

    double map_total = 0.0;
    std::vector<int> order;
    for (int r = 0; r < distances.rows; ++r) {
        const SampleMeta& q = bundle.meta(query_ids[r]);
        const auto keep = gallery_mask(q, gallery_metas, setting, options);
        const double* row = distances.values.data() + static_cast<size_t>(r) * distances.cols;

        order.clear();
        int n_pos = 0;
        for (int c = 0; c < distances.cols; ++c)
            if (keep[c]) {
                order.push_back(c);
                if (is_positive_pair(q, gallery_metas[c])) ++n_pos;
            }
        if (n_pos == 0) {
            ++report.n_queries_dropped;
            continue;
        }
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (row[a] != row[b]) return row[a] < row[b];
            return a < b;
        });

        int found = 0;
        double ap = 0.0;
        int first = 0;
        for (size_t rank = 0; rank < order.size(); ++rank)
            if (is_positive_pair(q, gallery_metas[order[rank]])) {
                ++found;
                ap += static_cast<double>(found) / static_cast<double>(rank + 1);
                if (first == 0) first = static_cast<int>(rank) + 1;
                if (found == n_pos) break;
            }
        map_total += ap / n_pos;
        for (size_t ki = 0; ki < report.ks.size(); ++ki)
            if (first <= report.ks[ki]) report.top_k[ki] += 1.0;
        ++report.n_queries_evaluated;
    }

    if (report.n_queries_evaluated == 0) throw NoEvaluableQueries("every query was dropped: no positives after masking");
    for (double& h : report.top_k) h /= report.n_queries_evaluated;
    report.map = map_total / report.n_queries_evaluated;
    return report;
}

const char* eval_setting_name(EvalSetting setting) {
    switch (setting) {
        case EvalSetting::General: return "general";
        case EvalSetting::SameClothes: return "sc";
        case EvalSetting::ClothesChanging: return "cc";
    }
    return "unknown";
}

std::string report_text(const EvalReport& report) {
    nlohmann::ordered_json doc;
    doc["setting"] = eval_setting_name(report.setting);
    nlohmann::ordered_json tk = nlohmann::ordered_json::object();
    for (size_t i = 0; i < report.ks.size(); ++i)
        tk["top" + std::to_string(report.ks[i])] = report.top_k[i];
    doc["cmc"] = tk;
    doc["map"] = report.map;
    doc["n_queries_evaluated"] = report.n_queries_evaluated;
    doc["n_queries_dropped"] = report.n_queries_dropped;
    if (!report.config_echo.empty()) doc["config"] = nlohmann::ordered_json::parse(report.config_echo);
    return doc.dump(2) + "\n";
}

}  // namespace faim
