#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "faim/errors.hpp"

namespace faim {

enum class Role : std::uint8_t { Query, Gallery };

struct SampleMeta {
    std::int32_t sample_id = 0;   // dense 0..n-1 within a bundle
    std::int32_t identity = 0;    // identity label
    std::int32_t clothes = 0;     // outfit label, globally unique per (identity, outfit)
    std::int32_t camera = 0;
    Role role = Role::Gallery;
};

struct BundleDims {
    int d_o = 0;
    int d_ir = 0;
    int d_re = 0;
};

// Which of the three aligned embedding spaces a computation runs in.
enum class Space { Original, Irrelevant, Relevant };

// Per-sample view over the three feature rows.
struct FeatureTriple {
    std::span<const float> f_o;
    std::span<const float> f_ir;
    std::span<const float> f_re;
};

// All samples of one retrieval problem: metadata, three aligned feature
// matrices (row-major f32) and per-sample reliability scores in [0,1].
// Immutable after construction; concurrent reads are safe.
class EmbeddingBundle {
public:
    EmbeddingBundle() = default;
    EmbeddingBundle(std::vector<SampleMeta> metas,
                    BundleDims dims,
                    std::vector<float> f_o,
                    std::vector<float> f_ir,
                    std::vector<float> f_re,
                    std::vector<double> reliability);

    int size() const { return static_cast<int>(metas_.size()); }
    const BundleDims& dims() const { return dims_; }

    const std::vector<SampleMeta>& metas() const { return metas_; }
    const SampleMeta& meta(int i) const { return metas_[static_cast<std::size_t>(i)]; }

    std::span<const float> feature(Space s, int i) const;
    FeatureTriple features(int i) const;
    const std::vector<float>& feature_matrix(Space s) const;
    int dim(Space s) const;

    double reliability(int i) const { return reliability_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& reliability() const { return reliability_; }

    std::vector<int> query_ids() const;
    std::vector<int> gallery_ids() const;

    // Copy with roles replaced (used by split construction).
    EmbeddingBundle with_roles(const std::vector<Role>& roles) const;
    // Copy keeping only the listed samples, ids renumbered densely in the
    // order given.
    EmbeddingBundle subset(const std::vector<int>& keep) const;

private:
    std::vector<SampleMeta> metas_;
    BundleDims dims_;
    std::vector<float> f_o_, f_ir_, f_re_;
    std::vector<double> reliability_;
};

struct Violation {
    int sample_id = -1;  // -1 for bundle-level problems
    std::string reason;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string to_string() const;
};

// Checks every bundle invariant and reports all violations; never throws.
ValidationReport validate_bundle(const EmbeddingBundle& bundle);

// Returns a copy with every feature vector scaled to unit L2 norm.
// Throws ZeroVectorError when a vector's norm is below 1e-12.
EmbeddingBundle normalize_bundle(const EmbeddingBundle& bundle);

}  // namespace faim
