#include "faim/decoupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "faim/distance.hpp"
#include "faim/errors.hpp"
#include "faim/rng.hpp"

namespace faim {

namespace {

void require_batch(const LabeledBatch& batch) {
    const int b = batch.size();
    if (batch.dim <= 0) throw ShapeMismatch("batch dim must be positive");
    if (static_cast<int>(batch.clothes_labels.size()) != b)
        throw ShapeMismatch("clothes label count " + std::to_string(batch.clothes_labels.size()) +
                            " does not match batch size " + std::to_string(b));
    if (batch.features.size() != static_cast<size_t>(b) * batch.dim)
        throw ShapeMismatch("feature buffer holds " + std::to_string(batch.features.size()) +
                            " values, expected " + std::to_string(static_cast<size_t>(b) * batch.dim));
}

// Batch-hard hinge over anchors; candidate predicates select positives and
// negatives per anchor. Anchors with an empty side are skipped.
template <typename PosPred, typename NegPred>
double batch_hard(const LabeledBatch& batch, double margin, PosPred is_pos, NegPred is_neg) {
    require_batch(batch);
    const int b = batch.size();
    double total = 0.0;
    int valid = 0;
    for (int a = 0; a < b; ++a) {
        double hardest_pos = -1.0;
        double hardest_neg = std::numeric_limits<double>::infinity();
        for (int j = 0; j < b; ++j) {
            if (j == a) continue;
            if (is_pos(a, j))
                hardest_pos = std::max(hardest_pos, cosine_distance(batch.feature(a), batch.feature(j)));
            else if (is_neg(a, j))
                hardest_neg = std::min(hardest_neg, cosine_distance(batch.feature(a), batch.feature(j)));
        }
        if (hardest_pos < 0.0 || !std::isfinite(hardest_neg)) continue;
        total += std::max(0.0, hardest_pos - hardest_neg + margin);
        ++valid;
    }
    if (valid == 0) throw NoValidAnchor("no anchor has both a valid positive and negative");
    return total / valid;
}

}  // namespace

std::vector<double> LinearClassifier::logits(std::span<const float> x) const {
    if (static_cast<int>(x.size()) != dim)
        throw DimMismatch("classifier input has dim " + std::to_string(x.size()) + ", expected " +
                          std::to_string(dim));
    if (weight.size() != static_cast<size_t>(classes) * dim)
        throw ShapeMismatch("classifier weight holds " + std::to_string(weight.size()) +
                            " values for " + std::to_string(classes) + "x" + std::to_string(dim));
    if (!bias.empty() && static_cast<int>(bias.size()) != classes)
        throw ShapeMismatch("classifier bias length " + std::to_string(bias.size()) +
                            " does not match " + std::to_string(classes) + " classes");
    std::vector<double> out(classes, 0.0);
    for (int c = 0; c < classes; ++c) {
        const double* w = weight.data() + static_cast<size_t>(c) * dim;
        double acc = 0.0;
        for (int d = 0; d < dim; ++d) acc += w[d] * static_cast<double>(x[d]);
        out[c] = acc + (bias.empty() ? 0.0 : bias[c]);
    }
    return out;
}

std::vector<double> VarianceModel::sigma_ir(int i) const {
    std::vector<double> out = sigma_clo[i];
    for (double& v : out) v *= rho[i];
    return out;
}

double clothes_aware_triplet_loss(const LabeledBatch& batch, double margin) {
    return batch_hard(
        batch, margin,
        [&](int a, int j) { return batch.clothes_labels[j] == batch.clothes_labels[a]; },
        [&](int a, int j) {
            return batch.identity_labels[j] == batch.identity_labels[a] &&
                   batch.clothes_labels[j] != batch.clothes_labels[a];
        });
}

double identity_triplet_loss(const LabeledBatch& batch, double margin) {
    return batch_hard(
        batch, margin,
        [&](int a, int j) { return batch.identity_labels[j] == batch.identity_labels[a]; },
        [&](int a, int j) { return batch.identity_labels[j] != batch.identity_labels[a]; });
}

double cross_entropy_loss(const LinearClassifier& classifier, std::span<const float> feature,
                          int label) {
    if (label < 0 || label >= classifier.classes)
        throw LabelOutOfRange("label " + std::to_string(label) + " outside [0, " +
                              std::to_string(classifier.classes) + ")");
    std::vector<double> z = classifier.logits(feature);
    const double peak = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - peak);
    return peak + std::log(sum) - z[label];
}

ClothesVariance clothes_changing_variance(const EmbeddingBundle& bundle, int i) {
    const auto& metas = bundle.metas();
    const int y = metas[i].identity;
    const int c = metas[i].clothes;
    const int d = bundle.dim(Space::Irrelevant);

    std::vector<double> centroid(d, 0.0);
    int own_count = 0;
    std::vector<int> cross;
    for (int j = 0; j < bundle.size(); ++j) {
        if (metas[j].identity != y) continue;
        if (metas[j].clothes == c) {
            auto f = bundle.feature(Space::Irrelevant, j);
            for (int k = 0; k < d; ++k) centroid[k] += f[k];
            ++own_count;
        } else {
            cross.push_back(j);
        }
    }
    if (cross.empty()) throw SingleOutfitIdentity(i);
    for (double& v : centroid) v /= own_count;

    std::vector<double> acc(d, 0.0);
    for (int j : cross) {
        auto f = bundle.feature(Space::Irrelevant, j);
        for (int k = 0; k < d; ++k) {
            const double diff = centroid[k] - f[k];
            acc[k] += diff * diff;
        }
    }
    for (double& v : acc) v /= cross.size();

    double norm2 = 0.0;
    for (double v : acc) norm2 += v * v;
    ClothesVariance out;
    if (norm2 < 1e-24) {
        out.sigma_clo.assign(d, 0.0);
        out.degenerate = true;
        return out;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    out.sigma_clo.resize(d);
    for (int k = 0; k < d; ++k) out.sigma_clo[k] = acc[k] * inv;
    return out;
}

double sampled_classification_loss(std::span<const float> f_ir, std::span<const double> sigma_ir,
                                   const LinearClassifier& classifier, int label, int n_draws,
                                   uint64_t seed) {
    if (n_draws < 0) throw OutOfRange("draw count must be nonnegative");
    if (sigma_ir.size() != f_ir.size())
        throw DimMismatch("sigma length " + std::to_string(sigma_ir.size()) +
                          " does not match feature dim " + std::to_string(f_ir.size()));
    double loss = cross_entropy_loss(classifier, f_ir, label);
    if (n_draws == 0) return loss;
    DrawStream rng(seed);
    std::vector<float> z(f_ir.size());
    double perturbed = 0.0;
    for (int j = 0; j < n_draws; ++j) {
        for (size_t k = 0; k < z.size(); ++k)
            z[k] = static_cast<float>(static_cast<double>(f_ir[k]) + rng.normal() * sigma_ir[k]);
        perturbed += cross_entropy_loss(classifier, z, label);
    }
    return loss + perturbed / n_draws;
}

double feature_variance_loss(double rho, double lambda_fv) {
    return std::max(0.0, lambda_fv - rho);
}

double reliability_from_rho(double rho) {
    if (rho < 0.0) throw NegativeRho("rho " + std::to_string(rho) + " is negative");
    return std::clamp(1.0 - rho, 0.0, 1.0);
}

double total_loss(const LossParts& parts, double alpha_ir, double alpha_re) {
    return parts.l_o + alpha_ir * (parts.l_cls + parts.l_fv + parts.l_tri_ir) +
           alpha_re * parts.l_re;
}

}  // namespace faim
