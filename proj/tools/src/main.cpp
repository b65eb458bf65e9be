#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "faim/bundle.hpp"
#include "faim/bundle_io.hpp"
#include "faim/errors.hpp"
#include "faim/eval.hpp"
#include "faim/matrix_io.hpp"
#include "faim/oracle.hpp"
#include "faim/parallel.hpp"
#include "faim/pipeline.hpp"
#include "faim/synth.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitProtocol = 4;

ordered_json world_config_json(const faim::WorldConfig& c) {
    ordered_json j;
    j["n_identities"] = c.n_identities;
    j["clothes_per_identity"] = c.clothes_per_identity;
    j["samples_per_clothes"] = c.samples_per_clothes;
    j["n_cameras"] = c.n_cameras;
    j["d_o"] = c.dims.d_o;
    j["d_ir"] = c.dims.d_ir;
    j["d_re"] = c.dims.d_re;
    j["sigma_ir"] = c.sigma_ir;
    j["sigma_re"] = c.sigma_re;
    j["degrade_fraction"] = c.degrade_fraction;
    j["degrade_strength"] = c.degrade_strength;
    j["drop_same_clothes_fraction"] = c.drop_same_clothes_fraction;
    j["query_fraction"] = c.query_fraction;
    j["seed"] = c.seed;
    return j;
}

faim::WorldConfig world_config_from_json(const ordered_json& j) {
    faim::WorldConfig c;
    c.n_identities = j.at("n_identities").get<int>();
    c.clothes_per_identity = j.at("clothes_per_identity").get<int>();
    c.samples_per_clothes = j.at("samples_per_clothes").get<int>();
    c.n_cameras = j.at("n_cameras").get<int>();
    c.dims.d_o = j.at("d_o").get<int>();
    c.dims.d_ir = j.at("d_ir").get<int>();
    c.dims.d_re = j.at("d_re").get<int>();
    c.sigma_ir = j.at("sigma_ir").get<double>();
    c.sigma_re = j.at("sigma_re").get<double>();
    c.degrade_fraction = j.at("degrade_fraction").get<double>();
    c.degrade_strength = j.at("degrade_strength").get<double>();
    c.drop_same_clothes_fraction = j.at("drop_same_clothes_fraction").get<double>();
    c.query_fraction = j.at("query_fraction").get<double>();
    c.seed = j.at("seed").get<uint64_t>();
    return c;
}

faim::ImMode parse_mode(const std::string& text) {
    if (text == "kr") return faim::ImMode::KReciprocal;
    if (text == "gnn") return faim::ImMode::Gnn;
    throw faim::ConfigInvalid("mode", "must be 'kr' or 'gnn', got '" + text + "'");
}

faim::EvalSetting parse_setting(const std::string& text) {
    if (text == "general") return faim::EvalSetting::General;
    if (text == "sc") return faim::EvalSetting::SameClothes;
    if (text == "cc") return faim::EvalSetting::ClothesChanging;
    throw faim::ConfigInvalid("setting", "must be 'general', 'sc' or 'cc', got '" + text + "'");
}

// "dynamic" or "fixed" or "fixed:a,b,c".
void parse_weights(const std::string& text, faim::RerankOptions& opts) {
    if (text == "dynamic") {
        opts.dynamic_weights = true;
        return;
    }
    if (text.rfind("fixed", 0) != 0)
        throw faim::ConfigInvalid("weights", "must be 'dynamic' or 'fixed[:a,b,c]', got '" + text + "'");
    opts.dynamic_weights = false;
    if (text == "fixed") return;
    if (text[5] != ':')
        throw faim::ConfigInvalid("weights", "must be 'dynamic' or 'fixed[:a,b,c]', got '" + text + "'");
    double a = 0.0, b = 0.0, c = 0.0;
    char tail = '\0';
    if (std::sscanf(text.c_str() + 6, "%lf,%lf,%lf%c", &a, &b, &c, &tail) != 3)
        throw faim::ConfigInvalid("weights", "fixed weights must be three comma-separated reals");
    opts.fixed_a = a;
    opts.fixed_b = b;
    opts.fixed_c = c;
}

ordered_json rerank_options_json(const faim::RerankOptions& o, const std::string& bundle_path) {
    ordered_json j;
    j["bundle"] = bundle_path;
    j["mode"] = o.mode == faim::ImMode::Gnn ? "gnn" : "kr";
    j["k"] = o.k;
    j["m_intermediaries"] = o.m_intermediaries;
    if (o.dynamic_weights) {
        j["weights"] = "dynamic";
    } else {
        j["weights"] = "fixed";
        j["fixed_weights"] = {o.fixed_a, o.fixed_b, o.fixed_c};
    }
    j["rescale_direct"] = o.rescale_direct;
    j["kr_expansion"] = o.kr_expansion;
    j["threads"] = o.threads;
    return j;
}

faim::EmbeddingBundle load_valid_bundle(const std::string& path) {
    faim::EmbeddingBundle bundle = faim::load_bundle(path);
    faim::ValidationReport report = faim::validate_bundle(bundle);
    if (!report.ok()) {
        std::cerr << "bundle validation failed for " << path << ":\n" << report.to_string();
        throw faim::DimMismatch("bundle failed validation");
    }
    return bundle;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw faim::FormatError(path.string(), 0, "cannot open for writing");
    out << text;
    if (!out) throw faim::FormatError(path.string(), 0, "write failed");
}

// Gallery shrunk by removing the `fraction` most reliable gallery samples
// (ties by ascending id), mirroring a world that lost its trustworthy
// intermediaries.
faim::EmbeddingBundle drop_reliable_gallery(const faim::EmbeddingBundle& bundle, double fraction) {
    std::vector<int> gallery = bundle.gallery_ids();
    std::sort(gallery.begin(), gallery.end(), [&](int a, int b) {
        if (bundle.reliability(a) != bundle.reliability(b))
            return bundle.reliability(a) > bundle.reliability(b);
        return a < b;
    });
    const auto n_drop = static_cast<size_t>(std::llround(fraction * static_cast<double>(gallery.size())));
    std::vector<char> dropped(bundle.size(), 0);
    for (size_t i = 0; i < n_drop && i < gallery.size(); ++i) dropped[gallery[i]] = 1;
    std::vector<int> keep;
    for (int i = 0; i < bundle.size(); ++i)
        if (!dropped[i]) keep.push_back(i);
    return bundle.subset(keep);
}

int cmd_gen(const faim::WorldConfig& config, const std::string& out_dir) {
    auto [bundle, truth] = faim::generate_world(config);
    ordered_json extra;
    extra["world"] = world_config_json(config);
    extra["degraded"] = truth.degraded;
    faim::save_bundle(bundle, out_dir, extra.dump());
    std::cout << "wrote bundle with " << bundle.size() << " samples ("
              << bundle.query_ids().size() << " queries, " << bundle.gallery_ids().size()
              << " galleries) to " << out_dir << "\n";
    return kExitOk;
}

int cmd_rerank(const std::string& bundle_path, const std::string& out_dir,
               const faim::RerankOptions& opts, bool csv) {
    faim::EmbeddingBundle bundle = load_valid_bundle(bundle_path);
    faim::RerankOutput output = faim::rerank(bundle, opts);
    faim::save_rerank_artifacts(output, out_dir, rerank_options_json(opts, bundle_path).dump(),
                                csv);
    std::cout << "wrote rerank artifacts (" << output.d_star.rows << "x" << output.d_star.cols
              << ") to " << out_dir << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& bundle_path, const std::string& distances_dir,
             const std::string& matrix_name, const std::string& setting_text,
             bool same_camera_rule, const std::string& out_path) {
    faim::EmbeddingBundle bundle = load_valid_bundle(bundle_path);
    faim::DistanceMatrix distances = faim::load_rerank_matrix(distances_dir, matrix_name);
    faim::EvalOptions options;
    options.same_camera_rule = same_camera_rule;
    faim::EvalReport report = faim::evaluate(bundle, distances, parse_setting(setting_text), options);
    ordered_json echo;
    echo["bundle"] = bundle_path;
    echo["distances"] = distances_dir;
    echo["matrix"] = matrix_name;
    echo["setting"] = setting_text;
    echo["same_camera_rule"] = same_camera_rule;
    report.config_echo = echo.dump();
    const std::string text = faim::report_text(report);
    std::cout << text;
    if (!out_path.empty()) write_text(out_path, text);
    return kExitOk;
}

struct AblateParams {
    std::string bundle_path;
    std::string out_path;
    std::vector<std::string> modes;
    std::vector<std::string> settings;
    int k = 20;
    int m = 10;
    double drop_same_clothes = 1.0;
    double drop_reliability = 0.5;
    int threads = 0;
    bool kr_expansion = false;
};

int cmd_ablate(const AblateParams& params) {
    faim::EmbeddingBundle base = load_valid_bundle(params.bundle_path);

    // The drop-sc variant regenerates the world from the manifest's config
    // echo so mate removal happens at the source.
    faim::WorldConfig world_config;
    bool have_world_config = false;
    try {
        ordered_json manifest = ordered_json::parse(faim::read_bundle_manifest(params.bundle_path));
        if (manifest.contains("world")) {
            world_config = world_config_from_json(manifest["world"]);
            have_world_config = true;
        }
    } catch (const faim::Error&) {
    }
    if (!have_world_config)
        throw faim::ConfigInvalid("bundle",
                                  "ablate needs a generated bundle whose manifest carries the "
                                  "world config echo");

    ordered_json doc;
    doc["bundle"] = params.bundle_path;
    ordered_json cfg;
    cfg["k"] = params.k;
    cfg["m_intermediaries"] = params.m;
    cfg["drop_same_clothes"] = params.drop_same_clothes;
    cfg["drop_reliability"] = params.drop_reliability;
    cfg["kr_expansion"] = params.kr_expansion;
    doc["config"] = cfg;
    ordered_json rows = ordered_json::array();

    for (const std::string& mode_text : params.modes) {
        const faim::ImMode mode = parse_mode(mode_text);
        for (const std::string& variant : {std::string("all"), std::string("drop_sc"),
                                           std::string("drop_rel")}) {
            faim::EmbeddingBundle bundle = base;
            if (variant == "drop_sc") {
                faim::WorldConfig dropped = world_config;
                dropped.drop_same_clothes_fraction = params.drop_same_clothes;
                bundle = faim::generate_world(dropped).first;
            } else if (variant == "drop_rel") {
                bundle = drop_reliable_gallery(base, params.drop_reliability);
            }
            bundle = faim::normalize_bundle(bundle);

            faim::RerankOptions opts;
            opts.mode = mode;
            opts.k = params.k;
            opts.m_intermediaries = params.m;
            opts.threads = params.threads;
            opts.kr_expansion = params.kr_expansion;

            faim::RouteComputation rc = faim::compute_routes(bundle, opts);
            opts.dynamic_weights = false;
            faim::RerankOutput fixed = faim::fuse_routes(bundle, rc, opts);
            opts.dynamic_weights = true;
            faim::RerankOutput dynamic = faim::fuse_routes(bundle, rc, opts);

            faim::DistanceMatrix rerank_o = fixed.unit.d_direct;
            for (size_t i = 0; i < rerank_o.values.size(); ++i)
                rerank_o.values[i] += fixed.unit.d_o.values[i];

            const std::pair<std::string, const faim::DistanceMatrix*> methods[] = {
                {"direct", &fixed.raw.d_direct},
                {"rerank_o", &rerank_o},
                {"im_fixed", &fixed.d_star},
                {"im_ibfw", &dynamic.d_star},
            };
            for (const auto& [method, matrix] : methods)
                for (const std::string& setting_text : params.settings) {
                    faim::EvalReport report =
                        faim::evaluate(bundle, *matrix, parse_setting(setting_text));
                    ordered_json row;
                    row["mode"] = mode_text;
                    row["variant"] = variant;
                    row["method"] = method;
                    row["setting"] = setting_text;
                    for (size_t i = 0; i < report.ks.size(); ++i)
                        row["top" + std::to_string(report.ks[i])] = report.top_k[i];
                    row["map"] = report.map;
                    row["evaluated"] = report.n_queries_evaluated;
                    row["dropped"] = report.n_queries_dropped;
                    rows.push_back(row);
                }
        }
    }
    doc["rows"] = rows;
    const std::string text = doc.dump(2) + "\n";
    std::cout << text;
    if (!params.out_path.empty()) write_text(params.out_path, text);
    return kExitOk;
}

struct OracleCheckParams {
    int seeds = 20;
    std::vector<int> sizes = {60, 200};
    std::vector<int> ks = {5, 20};
    std::vector<std::string> modes = {"kr", "gnn"};
    int m = 10;
    double tolerance = 1e-9;
    bool inject_fault = false;
};

int cmd_oracle_check(const OracleCheckParams& params) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    faim::oracle::DiffReport worst;
    worst.tolerance = params.tolerance;
    std::string worst_combo = "none";
    int runs = 0;

    for (int seed = 0; seed < params.seeds; ++seed)
        for (int n : params.sizes) {
            faim::WorldConfig config;
            config.n_identities = std::max(2, n / 4);
            config.clothes_per_identity = 2;
            config.samples_per_clothes = 2;
            config.dims = {16, 16, 16};
            config.degrade_fraction = 0.3;
            config.degrade_strength = 0.5;
            config.query_fraction = 0.3;
            config.seed = 1000 + static_cast<uint64_t>(seed) * 17 + static_cast<uint64_t>(n);
            auto [bundle, truth] = faim::generate_world(config);

            for (int k : params.ks)
                for (const std::string& mode_text : params.modes) {
                    faim::RerankOptions opts;
                    opts.mode = parse_mode(mode_text);
                    opts.k = k;
                    opts.m_intermediaries = params.m;
                    faim::RerankOutput optimized = faim::rerank(bundle, opts);
                    if (params.inject_fault && runs == 0)
                        optimized.d_star.values[0] += 1e-3;
                    faim::oracle::NaiveRerank reference = faim::oracle::rerank_naive(bundle, opts);
                    faim::oracle::DiffReport diff =
                        faim::oracle::compare_rerank(reference, optimized, params.tolerance);
                    ++runs;
                    if (diff.max_abs_diff > worst.max_abs_diff || runs == 1) {
                        worst = diff;
                        worst_combo = "seed=" + std::to_string(seed) + " n=" + std::to_string(n) +
                                      " k=" + std::to_string(k) + " mode=" + mode_text;
                    }
                }
        }

    const double elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - start).count() / 1000.0;
    std::cout << "oracle-check: " << runs << " comparisons, worst |diff| = " << worst.max_abs_diff
              << " at stage " << worst.stage << " cell (" << worst.row << "," << worst.col
              << ") [" << worst_combo << "], tolerance " << worst.tolerance << ", " << elapsed
              << " s\n";
    if (!worst.pass) {
        std::cout << "oracle-check: FAIL\n";
        return 1;
    }
    std::cout << "oracle-check: PASS\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clothes-changing retrieval toolkit: synthetic worlds, intermediary-matching "
                 "re-ranking, and evaluation"};
    app.require_subcommand(1);

    // gen
    faim::WorldConfig world;
    std::string gen_out;
    CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic bundle");
    gen->add_option("--ids", world.n_identities, "Identity count");
    gen->add_option("--clothes", world.clothes_per_identity, "Clothes groups per identity");
    gen->add_option("--per", world.samples_per_clothes, "Samples per clothes group");
    gen->add_option("--cameras", world.n_cameras, "Camera count");
    gen->add_option("--d-o", world.dims.d_o, "Original feature dim");
    gen->add_option("--d-ir", world.dims.d_ir, "Clothes-irrelevant feature dim");
    gen->add_option("--d-re", world.dims.d_re, "Clothes-relevant feature dim");
    gen->add_option("--sigma-ir", world.sigma_ir, "Noise scale of f_ir");
    gen->add_option("--sigma-re", world.sigma_re, "Noise scale of f_re");
    gen->add_option("--degrade-fraction", world.degrade_fraction,
                    "Share of samples with corrupted f_ir");
    gen->add_option("--degrade-strength", world.degrade_strength, "Corruption strength in [0,1]");
    gen->add_option("--drop-same-clothes", world.drop_same_clothes_fraction,
                    "Fraction of queries' same-clothes gallery mates to remove");
    gen->add_option("--query-fraction", world.query_fraction, "Query share of host clothes groups");
    gen->add_option("--seed", world.seed, "World seed");
    gen->add_option("--out", gen_out, "Output bundle directory")->required();
    gen->set_config("--config", "", "Flat key=value config file (flags override)");

    // rerank
    std::string rr_bundle, rr_out, rr_mode = "kr", rr_weights = "dynamic";
    faim::RerankOptions rr_opts;
    bool rr_csv = false, rr_no_rescale = false;
    CLI::App* rerank = app.add_subcommand("rerank", "Compute route distances and fused output");
    rerank->add_option("--bundle", rr_bundle, "Bundle directory or CSV")->required();
    rerank->add_option("--out", rr_out, "Artifact output directory")->required();
    rerank->add_option("--mode", rr_mode, "Intermediary matching mode: kr or gnn");
    rerank->add_option("--k", rr_opts.k, "Neighborhood size");
    rerank->add_option("--m-intermediaries", rr_opts.m_intermediaries, "Intermediaries per route");
    rerank->add_option("--weights", rr_weights, "dynamic or fixed[:a,b,c]");
    rerank->add_flag("--no-direct-rescale", rr_no_rescale,
                     "Keep d_direct on its native [0,2] scale");
    rerank->add_flag("--kr-expansion", rr_opts.kr_expansion,
                     "Half-k expansion of reciprocal sets");
    rerank->add_option("--threads", rr_opts.threads, "Worker cap (0 = FAIM_THREADS or hardware)");
    rerank->add_flag("--csv", rr_csv, "Also write CSV twins of every matrix");

    // eval
    std::string ev_bundle, ev_distances, ev_matrix = "d_star", ev_setting = "general", ev_out;
    bool ev_no_camera_rule = false;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a distance artifact");
    eval_cmd->add_option("--bundle", ev_bundle, "Bundle directory or CSV")->required();
    eval_cmd->add_option("--distances", ev_distances, "Rerank artifact directory")->required();
    eval_cmd->add_option("--matrix", ev_matrix, "Artifact matrix name");
    eval_cmd->add_option("--setting", ev_setting, "general, sc or cc");
    eval_cmd->add_flag("--no-same-camera-rule", ev_no_camera_rule,
                       "Keep same-identity same-camera gallery rows");
    eval_cmd->add_option("--out", ev_out, "Also write the report to this file");

    // ablate
    AblateParams ab;
    std::string ab_modes = "kr,gnn", ab_settings = "general,sc,cc";
    CLI::App* ablate = app.add_subcommand("ablate", "Method ladder across stress variants");
    ablate->add_option("--bundle", ab.bundle_path, "Bundle directory or CSV")->required();
    ablate->add_option("--out", ab.out_path, "Report output file");
    ablate->add_option("--modes", ab_modes, "Comma list of kr,gnn");
    ablate->add_option("--settings", ab_settings, "Comma list of general,sc,cc");
    ablate->add_option("--k", ab.k, "Neighborhood size");
    ablate->add_option("--m-intermediaries", ab.m, "Intermediaries per route");
    ablate->add_option("--drop-same-clothes", ab.drop_same_clothes,
                       "Mate removal fraction of the drop_sc variant");
    ablate->add_option("--drop-reliability", ab.drop_reliability,
                       "Gallery removal fraction of the drop_rel variant");
    ablate->add_option("--threads", ab.threads, "Worker cap");
    ablate->add_flag("--kr-expansion", ab.kr_expansion, "Half-k expansion of reciprocal sets");

    // oracle-check
    OracleCheckParams oc;
    CLI::App* oracle_check = app.add_subcommand("oracle-check",
                                                "Differential test against the naive reference");
    oracle_check->add_option("--seeds", oc.seeds, "Seed count");
    oracle_check->add_option("--n", oc.sizes, "World sizes (repeatable)");
    oracle_check->add_option("--k", oc.ks, "Neighborhood sizes (repeatable)");
    oracle_check->add_option("--modes", oc.modes, "Modes to check (repeatable)");
    oracle_check->add_option("--m-intermediaries", oc.m, "Intermediaries per route");
    oracle_check->add_option("--tolerance", oc.tolerance, "Max-abs tolerance");
    oracle_check->add_flag("--inject-fault", oc.inject_fault, "Perturb one cell (harness self-test)")
        ->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (gen->parsed()) return cmd_gen(world, gen_out);
        if (rerank->parsed()) {
            rr_opts.mode = parse_mode(rr_mode);
            parse_weights(rr_weights, rr_opts);
            rr_opts.rescale_direct = !rr_no_rescale;
            return cmd_rerank(rr_bundle, rr_out, rr_opts, rr_csv);
        }
        if (eval_cmd->parsed())
            return cmd_eval(ev_bundle, ev_distances, ev_matrix, ev_setting, !ev_no_camera_rule,
                            ev_out);
        if (ablate->parsed()) {
            ab.modes.clear();
            for (auto& piece : CLI::detail::split(ab_modes, ',')) ab.modes.push_back(piece);
            ab.settings.clear();
            for (auto& piece : CLI::detail::split(ab_settings, ',')) ab.settings.push_back(piece);
            return cmd_ablate(ab);
        }
        if (oracle_check->parsed()) return cmd_oracle_check(oc);
    } catch (const faim::ConfigInvalid& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const faim::KTooLarge& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const faim::InsufficientClothes& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const faim::OutOfRange& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const faim::NoEvaluableQueries& e) {
        std::cerr << "protocol error: " << e.what() << "\n";
        return kExitProtocol;
    } catch (const faim::Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
