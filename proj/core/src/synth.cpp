#include "faim/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "faim/errors.hpp"
#include "faim/rng.hpp"

namespace faim {

namespace {

// Spread of the per-(identity, clothes) offset relative to the unit-variance
// identity latent. Frozen alongside the WorldConfig noise defaults so the
// direct baseline lands mid-range on the clothes-changing protocol.
constexpr double kClothesScale = 1.25;

// Stream tweaks so role assignment and mate dropping do not consume the
// feature stream.
constexpr uint64_t kSplitSeedSalt = 0x9e3779b97f4a7c15ULL;
constexpr uint64_t kDropSeedSalt = 0xc2b2ae3d27d4eb4fULL;

void check_config(const WorldConfig& c) {
    if (c.n_identities < 1) throw ConfigInvalid("n_identities", "must be >= 1");
    if (c.clothes_per_identity < 1) throw ConfigInvalid("clothes_per_identity", "must be >= 1");
    if (c.samples_per_clothes < 1) throw ConfigInvalid("samples_per_clothes", "must be >= 1");
    if (c.n_cameras < 1) throw ConfigInvalid("n_cameras", "must be >= 1");
    if (c.dims.d_o < 1) throw ConfigInvalid("d_o", "must be >= 1");
    if (c.dims.d_ir < 1) throw ConfigInvalid("d_ir", "must be >= 1");
    if (c.dims.d_re < 1) throw ConfigInvalid("d_re", "must be >= 1");
    if (c.sigma_ir < 0.0) throw ConfigInvalid("sigma_ir", "must be >= 0");
    if (c.sigma_re < 0.0) throw ConfigInvalid("sigma_re", "must be >= 0");
    if (c.degrade_fraction < 0.0 || c.degrade_fraction > 1.0)
        throw ConfigInvalid("degrade_fraction", "must lie in [0,1]");
    if (c.degrade_strength < 0.0 || c.degrade_strength > 1.0)
        throw ConfigInvalid("degrade_strength", "must lie in [0,1]");
    if (c.drop_same_clothes_fraction < 0.0 || c.drop_same_clothes_fraction > 1.0)
        throw ConfigInvalid("drop_same_clothes_fraction", "must lie in [0,1]");
    if (c.query_fraction < 0.0 || c.query_fraction > 1.0)
        throw ConfigInvalid("query_fraction", "must lie in [0,1]");
}

std::vector<double> draw_vector(DrawStream& rng, int dim) {
    std::vector<double> out(dim);
    for (double& v : out) v = rng.normal();
    return out;
}

// Writes normalize(head(src, dim) + scale * noise) into the next row of out.
void emit_row(std::vector<float>& out, const std::vector<double>& src, int dim, double scale,
              DrawStream& rng, int sample_id, const char* which) {
    std::vector<double> row(dim);
    for (int k = 0; k < dim; ++k) row[k] = src[k] + scale * rng.normal();
    double norm2 = 0.0;
    for (double v : row) norm2 += v * v;
    if (norm2 < 1e-24) throw ZeroVectorError(sample_id, which);
    const double inv = 1.0 / std::sqrt(norm2);
    for (double v : row) out.push_back(static_cast<float>(v * inv));
}

void emit_plain_row(std::vector<float>& out, const std::vector<double>& src, int dim,
                    int sample_id, const char* which) {
    double norm2 = 0.0;
    for (int k = 0; k < dim; ++k) norm2 += src[k] * src[k];
    if (norm2 < 1e-24) throw ZeroVectorError(sample_id, which);
    const double inv = 1.0 / std::sqrt(norm2);
    for (int k = 0; k < dim; ++k) out.push_back(static_cast<float>(src[k] * inv));
}

WorldTruth truth_subset(const WorldTruth& t, const std::vector<int>& keep) {
    WorldTruth out;
    for (int i : keep) {
        out.identity.push_back(t.identity[i]);
        out.clothes.push_back(t.clothes[i]);
        out.camera.push_back(t.camera[i]);
        out.degraded.push_back(t.degraded[i]);
        out.reliability.push_back(t.reliability[i]);
    }
    return out;
}

}  // namespace

std::pair<EmbeddingBundle, WorldTruth> generate_world(const WorldConfig& config) {
    check_config(config);
    const int latent_dim =
        std::max(config.dims.d_o, std::max(config.dims.d_ir, config.dims.d_re));
    const int n = config.n_identities * config.clothes_per_identity * config.samples_per_clothes;
    const double sigma_o = config.sigma_ir + config.sigma_re;

    DrawStream rng(config.seed);

    std::vector<std::vector<double>> identity_latent(config.n_identities);
    for (auto& u : identity_latent) u = draw_vector(rng, latent_dim);

    std::vector<std::vector<double>> clothes_latent(
        static_cast<size_t>(config.n_identities) * config.clothes_per_identity);
    for (int y = 0; y < config.n_identities; ++y)
        for (int c = 0; c < config.clothes_per_identity; ++c) {
            auto v = identity_latent[y];
            for (int k = 0; k < latent_dim; ++k) v[k] += kClothesScale * rng.normal();
            clothes_latent[static_cast<size_t>(y) * config.clothes_per_identity + c] = std::move(v);
        }

    std::vector<SampleMeta> metas;
    metas.reserve(n);
    WorldTruth truth;
    std::vector<float> f_o, f_ir, f_re;
    f_o.reserve(static_cast<size_t>(n) * config.dims.d_o);
    f_ir.reserve(static_cast<size_t>(n) * config.dims.d_ir);
    f_re.reserve(static_cast<size_t>(n) * config.dims.d_re);

    std::vector<double> o_src(latent_dim);
    int sample_id = 0;
    for (int y = 0; y < config.n_identities; ++y)
        for (int c = 0; c < config.clothes_per_identity; ++c) {
            const auto& u = identity_latent[y];
            const auto& v = clothes_latent[static_cast<size_t>(y) * config.clothes_per_identity + c];
            for (int s = 0; s < config.samples_per_clothes; ++s, ++sample_id) {
                SampleMeta meta;
                meta.sample_id = sample_id;
                meta.identity = y;
                meta.clothes = y * config.clothes_per_identity + c;
                meta.camera = static_cast<int>(rng.uniform_index(config.n_cameras));
                meta.role = Role::Gallery;
                const bool degraded = rng.uniform() < config.degrade_fraction;

                std::vector<double> ir_src;
                if (degraded) {
                    ir_src = draw_vector(rng, latent_dim);
                    const double s1 = 1.0 - config.degrade_strength;
                    for (int k = 0; k < latent_dim; ++k)
                        ir_src[k] = s1 * u[k] + config.degrade_strength * ir_src[k];
                    emit_plain_row(f_ir, ir_src, config.dims.d_ir, sample_id, "f_ir");
                } else {
                    ir_src = u;
                    emit_row(f_ir, u, config.dims.d_ir, config.sigma_ir, rng, sample_id, "f_ir");
                }
                emit_row(f_re, v, config.dims.d_re, config.sigma_re, rng, sample_id, "f_re");
                for (int k = 0; k < latent_dim; ++k) o_src[k] = (ir_src[k] + v[k]) / 2.0;
                emit_row(f_o, o_src, config.dims.d_o, sigma_o, rng, sample_id, "f_o");

                metas.push_back(meta);
                truth.identity.push_back(y);
                truth.clothes.push_back(meta.clothes);
                truth.camera.push_back(meta.camera);
                truth.degraded.push_back(degraded ? 1 : 0);
                truth.reliability.push_back(degraded ? 1.0 - config.degrade_strength : 1.0);
            }
        }

    EmbeddingBundle bundle(std::move(metas), config.dims, std::move(f_o), std::move(f_ir),
                           std::move(f_re), truth.reliability);
    bundle = make_cc_split(bundle, truth, config.query_fraction, config.seed ^ kSplitSeedSalt);

    if (config.drop_same_clothes_fraction > 0.0) {
        // A gallery sample is a mate when some query shares its clothes
        // label; clothes labels already encode (identity, outfit).
        std::vector<char> query_clothes(static_cast<size_t>(config.n_identities) *
                                            config.clothes_per_identity,
                                        0);
        for (const auto& m : bundle.metas())
            if (m.role == Role::Query) query_clothes[m.clothes] = 1;
        std::vector<int> mates;
        for (const auto& m : bundle.metas())
            if (m.role == Role::Gallery && query_clothes[m.clothes]) mates.push_back(m.sample_id);

        DrawStream drop_rng(config.seed ^ kDropSeedSalt);
        for (size_t i = mates.size(); i > 1; --i)
            std::swap(mates[i - 1], mates[drop_rng.uniform_index(i)]);
        const auto n_drop = static_cast<size_t>(
            std::llround(config.drop_same_clothes_fraction * static_cast<double>(mates.size())));
        std::vector<char> dropped(bundle.size(), 0);
        for (size_t i = 0; i < n_drop; ++i) dropped[mates[i]] = 1;

        std::vector<int> keep;
        for (int i = 0; i < bundle.size(); ++i)
            if (!dropped[i]) keep.push_back(i);
        bundle = bundle.subset(keep);
        truth = truth_subset(truth, keep);
    }
    return {std::move(bundle), std::move(truth)};
}

EmbeddingBundle make_cc_split(const EmbeddingBundle& bundle, const WorldTruth& truth,
                              double query_fraction, uint64_t seed) {
    if (static_cast<int>(truth.identity.size()) != bundle.size())
        throw ShapeMismatch("world truth covers " + std::to_string(truth.identity.size()) +
                            " samples, bundle has " + std::to_string(bundle.size()));
    if (query_fraction < 0.0 || query_fraction > 1.0)
        throw ConfigInvalid("query_fraction", "must lie in [0,1]");

    // identity -> clothes -> member ids, all ascending.
    std::map<int, std::map<int, std::vector<int>>> groups;
    for (const auto& m : bundle.metas()) groups[m.identity][m.clothes].push_back(m.sample_id);
    for (const auto& [identity, by_clothes] : groups)
        if (by_clothes.size() < 2) throw InsufficientClothes(identity);

    DrawStream rng(seed);
    std::vector<Role> roles(bundle.size(), Role::Gallery);
    std::vector<const std::vector<int>*> hosts;
    for (const auto& [identity, by_clothes] : groups) {
        std::vector<const std::vector<int>*> members;
        for (const auto& [clothes, ids] : by_clothes) members.push_back(&ids);
        const auto& host = *members[rng.uniform_index(members.size())];
        hosts.push_back(&host);
        // host[0] stays in the gallery so same-clothes positives survive.
        for (size_t i = 1; i < host.size(); ++i)
            if (rng.uniform() < query_fraction) roles[host[i]] = Role::Query;
    }

    if (std::count(roles.begin(), roles.end(), Role::Query) == 0) {
        bool placed = false;
        for (const auto* host : hosts)
            if (host->size() >= 2) {
                roles[(*host)[1]] = Role::Query;
                placed = true;
                break;
            }
        if (!placed) roles[(*hosts.front())[0]] = Role::Query;
    }
    return bundle.with_roles(roles);
}

}  // namespace faim
