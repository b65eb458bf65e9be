#pragma once

#include <span>
#include <string>
#include <vector>

#include "faim/bundle.hpp"
#include "faim/distance.hpp"

namespace faim {

// Gallery filter applied per query before ranking. All settings drop
// same-identity same-camera rows (toggleable); SameClothes additionally
// drops same-identity different-clothes rows, ClothesChanging drops
// same-identity same-clothes rows. Other identities always stay.
enum class EvalSetting { General, SameClothes, ClothesChanging };

struct EvalOptions {
    bool same_camera_rule = true;
    std::vector<int> cmc_ks = {1, 5, 10};
};

std::vector<char> gallery_mask(const SampleMeta& query, std::span<const SampleMeta> gallery,
                               EvalSetting setting, const EvalOptions& options = {});

// rank_lists: per-query gallery ids in retrieval order; positives: per-query
// ascending id sets. Queries with no positives are skipped.
std::vector<double> cmc_curve(const std::vector<std::vector<int>>& rank_lists,
                              const std::vector<std::vector<int>>& positives,
                              const std::vector<int>& ks);

double mean_average_precision(const std::vector<std::vector<int>>& rank_lists,
                              const std::vector<std::vector<int>>& positives);

struct EvalReport {
    EvalSetting setting = EvalSetting::General;
    std::vector<int> ks;
    std::vector<double> top_k;
    double map = 0.0;
    int n_queries_evaluated = 0;
    int n_queries_dropped = 0;
    std::string config_echo;
};

// Ranks ascending by distance (ties: ascending gallery position), applies
// the setting's mask, computes CMC and mAP.
EvalReport evaluate(const EmbeddingBundle& bundle, const DistanceMatrix& distances,
                    EvalSetting setting, const EvalOptions& options = {});

const char* eval_setting_name(EvalSetting setting);

// Stable-key-order text form used for diff-based regression checks.
std::string report_text(const EvalReport& report);

}  // namespace faim
