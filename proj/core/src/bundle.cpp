#include "faim/bundle.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <utility>

namespace faim {

EmbeddingBundle::EmbeddingBundle(std::vector<SampleMeta> metas,
                                 BundleDims dims,
                                 std::vector<float> f_o,
                                 std::vector<float> f_ir,
                                 std::vector<float> f_re,
                                 std::vector<double> reliability)
    : metas_(std::move(metas)),
      dims_(dims),
      f_o_(std::move(f_o)),
      f_ir_(std::move(f_ir)),
      f_re_(std::move(f_re)),
      reliability_(std::move(reliability)) {
    const std::size_t n = metas_.size();
    auto expect = [n](const std::vector<float>& m, int d, const char* name) {
        if (m.size() != n * static_cast<std::size_t>(d)) {
            throw DimMismatch(std::string(name) + " matrix size does not match n * dim");
        }
    };
    expect(f_o_, dims_.d_o, "f_o");
    expect(f_ir_, dims_.d_ir, "f_ir");
    expect(f_re_, dims_.d_re, "f_re");
    if (reliability_.size() != n) {
        throw DimMismatch("reliability list size does not match sample count");
    }
}

int EmbeddingBundle::dim(Space s) const {
    switch (s) {
        case Space::Original: return dims_.d_o;
        case Space::Irrelevant: return dims_.d_ir;
        case Space::Relevant: return dims_.d_re;
    }
    return 0;
}

const std::vector<float>& EmbeddingBundle::feature_matrix(Space s) const {
    switch (s) {
        case Space::Original: return f_o_;
        case Space::Irrelevant: return f_ir_;
        case Space::Relevant: return f_re_;
    }
    return f_o_;
}

std::span<const float> EmbeddingBundle::feature(Space s, int i) const {
    const int d = dim(s);
    const auto& m = feature_matrix(s);
    return {m.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)};
}

FeatureTriple EmbeddingBundle::features(int i) const {
    return {feature(Space::Original, i), feature(Space::Irrelevant, i),
            feature(Space::Relevant, i)};
}

std::vector<int> EmbeddingBundle::query_ids() const {
    std::vector<int> out;
    for (const auto& m : metas_) {
        if (m.role == Role::Query) out.push_back(m.sample_id);
    }
    return out;
}

std::vector<int> EmbeddingBundle::gallery_ids() const {
    std::vector<int> out;
    for (const auto& m : metas_) {
        if (m.role == Role::Gallery) out.push_back(m.sample_id);
    }
    return out;
}

EmbeddingBundle EmbeddingBundle::with_roles(const std::vector<Role>& roles) const {
    if (roles.size() != metas_.size()) {
        throw ShapeMismatch("role list size does not match sample count");
    }
    auto metas = metas_;
    for (std::size_t i = 0; i < metas.size(); ++i) metas[i].role = roles[i];
    return {std::move(metas), dims_, f_o_, f_ir_, f_re_, reliability_};
}

EmbeddingBundle EmbeddingBundle::subset(const std::vector<int>& keep) const {
    std::vector<SampleMeta> metas;
    std::vector<float> fo, fir, fre;
    std::vector<double> rel;
    metas.reserve(keep.size());
    rel.reserve(keep.size());
    fo.reserve(keep.size() * static_cast<std::size_t>(dims_.d_o));
    fir.reserve(keep.size() * static_cast<std::size_t>(dims_.d_ir));
    fre.reserve(keep.size() * static_cast<std::size_t>(dims_.d_re));
    std::int32_t next_id = 0;
    for (int idx : keep) {
        if (idx < 0 || idx >= size()) throw OutOfRange("subset index out of range");
        SampleMeta m = metas_[static_cast<std::size_t>(idx)];
        m.sample_id = next_id++;
        metas.push_back(m);
        auto append = [idx](std::vector<float>& dst, const std::vector<float>& src, int d) {
            const float* row = src.data() + static_cast<std::size_t>(idx) * d;
            dst.insert(dst.end(), row, row + d);
        };
        append(fo, f_o_, dims_.d_o);
        append(fir, f_ir_, dims_.d_ir);
        append(fre, f_re_, dims_.d_re);
        rel.push_back(reliability_[static_cast<std::size_t>(idx)]);
    }
    return {std::move(metas), dims_, std::move(fo), std::move(fir), std::move(fre),
            std::move(rel)};
}

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    if (ok()) {
        os << "bundle valid\n";
        return os.str();
    }
    for (const auto& v : violations) {
        if (v.sample_id >= 0) {
            os << "sample " << v.sample_id << ": " << v.reason << "\n";
        } else {
            os << "bundle: " << v.reason << "\n";
        }
    }
    return os.str();
}

namespace {

void check_finite_and_norms(const EmbeddingBundle& b, Space s, const char* name,
                            ValidationReport& report) {
    const int n = b.size();
    for (int i = 0; i < n; ++i) {
        auto row = b.feature(s, i);
        double norm_sq = 0.0;
        bool finite = true;
        for (float v : row) {
            if (!std::isfinite(v)) {
                finite = false;
                break;
            }
            norm_sq += static_cast<double>(v) * v;
        }
        if (!finite) {
            report.violations.push_back({i, std::string("non-finite value in ") + name});
            continue;
        }
        if (std::abs(std::sqrt(norm_sq) - 1.0) > 1e-6) {
            report.violations.push_back(
                {i, std::string(name) + " is not unit-normalized"});
        }
    }
}

}  // namespace

ValidationReport validate_bundle(const EmbeddingBundle& bundle) {
    ValidationReport report;
    const int n = bundle.size();
    if (n == 0) {
        report.violations.push_back({-1, "bundle is empty"});
        return report;
    }

    bool has_query = false, has_gallery = false;
    std::set<std::int32_t> seen_ids;
    for (int i = 0; i < n; ++i) {
        const auto& m = bundle.meta(i);
        if (m.sample_id != i) {
            report.violations.push_back(
                {i, "sample_id " + std::to_string(m.sample_id) +
                        " is not dense (expected " + std::to_string(i) + ")"});
        }
        if (!seen_ids.insert(m.sample_id).second) {
            report.violations.push_back({i, "duplicate sample_id"});
        }
        if (m.identity < 0) report.violations.push_back({i, "negative identity label"});
        if (m.clothes < 0) report.violations.push_back({i, "negative clothes label"});
        if (m.camera < 0) report.violations.push_back({i, "negative camera id"});
        if (m.role == Role::Query) has_query = true;
        if (m.role == Role::Gallery) has_gallery = true;
        const double r = bundle.reliability(i);
        if (!(r >= 0.0 && r <= 1.0)) {
            report.violations.push_back({i, "reliability outside [0,1]"});
        }
    }
    if (!has_query) report.violations.push_back({-1, "no query-role sample"});
    if (!has_gallery) report.violations.push_back({-1, "no gallery-role sample"});

    // A clothes label is an outfit of exactly one identity.
    std::map<std::int32_t, std::int32_t> clothes_owner;
    for (int i = 0; i < n; ++i) {
        const auto& m = bundle.meta(i);
        auto [it, inserted] = clothes_owner.emplace(m.clothes, m.identity);
        if (!inserted && it->second != m.identity) {
            report.violations.push_back(
                {i, "clothes_label " + std::to_string(m.clothes) +
                        " shared across identities " + std::to_string(it->second) +
                        " and " + std::to_string(m.identity)});
        }
    }

    check_finite_and_norms(bundle, Space::Original, "f_o", report);
    check_finite_and_norms(bundle, Space::Irrelevant, "f_ir", report);
    check_finite_and_norms(bundle, Space::Relevant, "f_re", report);
    return report;
}

namespace {

std::vector<float> normalized_matrix(const EmbeddingBundle& b, Space s, const char* name) {
    const int n = b.size();
    const int d = b.dim(s);
    std::vector<float> out(b.feature_matrix(s));
    for (int i = 0; i < n; ++i) {
        float* row = out.data() + static_cast<std::size_t>(i) * d;
        double norm_sq = 0.0;
        for (int j = 0; j < d; ++j) norm_sq += static_cast<double>(row[j]) * row[j];
        const double norm = std::sqrt(norm_sq);
        if (norm < 1e-12) throw ZeroVectorError(i, name);
        const double inv = 1.0 / norm;
        for (int j = 0; j < d; ++j) row[j] = static_cast<float>(row[j] * inv);
    }
    return out;
}

}  // namespace

EmbeddingBundle normalize_bundle(const EmbeddingBundle& bundle) {
    return {bundle.metas(), bundle.dims(),
            normalized_matrix(bundle, Space::Original, "f_o"),
            normalized_matrix(bundle, Space::Irrelevant, "f_ir"),
            normalized_matrix(bundle, Space::Relevant, "f_re"),
            bundle.reliability()};
}

}  // namespace faim
