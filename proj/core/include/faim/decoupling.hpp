#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "faim/bundle.hpp"

namespace faim {

// Mini-batch of unit feature rows with identity and clothes labels.
struct LabeledBatch {
    int dim = 0;
    std::vector<float> features;  // B x dim, row-major
    std::vector<int> identity_labels;
    std::vector<int> clothes_labels;

    int size() const { return static_cast<int>(identity_labels.size()); }
    std::span<const float> feature(int i) const {
        return {features.data() + static_cast<size_t>(i) * dim, static_cast<size_t>(dim)};
    }
};

// Plain affine map used as a desk-scale classifier. Empty bias means zero.
struct LinearClassifier {
    int classes = 0;
    int dim = 0;
    std::vector<double> weight;  // classes x dim, row-major
    std::vector<double> bias;

    std::vector<double> logits(std::span<const float> x) const;
};

// Per-sample clothes-variance state: a unit nonnegative direction, its scale,
// and their product.
struct VarianceModel {
    std::vector<std::vector<double>> sigma_clo;
    std::vector<double> rho;

    std::vector<double> sigma_ir(int i) const;
};

struct ClothesVariance {
    std::vector<double> sigma_clo;  // unit vector; all zeros when degenerate
    bool degenerate = false;
};

// Batch-hard triplet over clothes structure: positives share the anchor's
// clothes label, negatives share its identity but not its clothes. Anchors
// missing either side are skipped.
double clothes_aware_triplet_loss(const LabeledBatch& batch, double margin);

// Batch-hard triplet keyed on identity labels alone.
double identity_triplet_loss(const LabeledBatch& batch, double margin);

double cross_entropy_loss(const LinearClassifier& classifier, std::span<const float> feature,
                          int label);

// Direction of clothes-induced variation of one sample's identity-invariant
// feature, from squared deviations of cross-clothes samples to the sample's
// own (identity, clothes) centroid.
ClothesVariance clothes_changing_variance(const EmbeddingBundle& bundle, int i);

// ce(f) plus the mean cross-entropy of N noise-perturbed copies
// f + eps_j * sigma_ir, with eps_j drawn from the seeded stream.
double sampled_classification_loss(std::span<const float> f_ir, std::span<const double> sigma_ir,
                                   const LinearClassifier& classifier, int label, int n_draws,
                                   uint64_t seed);

double feature_variance_loss(double rho, double lambda_fv = 1.0);

double reliability_from_rho(double rho);

struct LossParts {
    double l_o = 0.0;
    double l_cls = 0.0;
    double l_fv = 0.0;
    double l_tri_ir = 0.0;
    double l_re = 0.0;
};

double total_loss(const LossParts& parts, double alpha_ir = 0.5, double alpha_re = 0.5);

}  // namespace faim
