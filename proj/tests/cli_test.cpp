#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "faim/bundle_io.hpp"
#include "faim/matrix_io.hpp"
#include "faim/pipeline.hpp"
#include "support/builders.hpp"

namespace {

namespace fs = std::filesystem;

const std::string kCli = FAIM_CLI_PATH;

std::string q(const std::string& path) { return "'" + path + "'"; }

fixtures::CommandResult run_cli(const std::string& args) {
    return fixtures::run_command(q(kCli) + " " + args);
}

// Small world shared by most tests: 6 identities x 2 outfits x 2 samples.
std::string gen_args(const std::string& out, int seed = 5) {
    return "gen --ids 6 --clothes 2 --per 2 --d-o 8 --d-ir 8 --d-re 8 "
           "--degrade-fraction 0.3 --degrade-strength 0.8 --seed " +
           std::to_string(seed) + " --out " + q(out);
}

bool same_bytes(const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    const std::string da((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    const std::string db((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    return !da.empty() && da == db;
}

TEST(Gen, WritesTheExpectedCensus) {
    const fixtures::TempDir dir;
    const auto result = run_cli(gen_args(dir.str("world")));
    ASSERT_EQ(result.exit_code, 0) << result.output;
    EXPECT_NE(result.output.find("24 samples"), std::string::npos) << result.output;
    ASSERT_TRUE(fs::exists(dir.path() / "world" / "manifest.json"));
    ASSERT_TRUE(fs::exists(dir.path() / "world" / "features.bin"));
    const auto manifest = faim::read_bundle_manifest(dir.str("world"));
    EXPECT_NE(manifest.find("\"world\""), std::string::npos);

    const auto bundle = faim::load_bundle(dir.str("world"));
    EXPECT_EQ(bundle.size(), 24);
    EXPECT_FALSE(bundle.query_ids().empty());
}

TEST(Gen, SameSeedIsByteIdentical) {
    const fixtures::TempDir dir;
    ASSERT_EQ(run_cli(gen_args(dir.str("a"))).exit_code, 0);
    ASSERT_EQ(run_cli(gen_args(dir.str("b"))).exit_code, 0);
    EXPECT_TRUE(same_bytes(dir.path() / "a" / "features.bin",
                           dir.path() / "b" / "features.bin"));

    ASSERT_EQ(run_cli(gen_args(dir.str("c"), 6)).exit_code, 0);
    EXPECT_FALSE(same_bytes(dir.path() / "a" / "features.bin",
                            dir.path() / "c" / "features.bin"));
}

TEST(Gen, BadKnobFailsWithTheFieldName) {
    const fixtures::TempDir dir;
    const auto result = run_cli("gen --ids 4 --degrade-fraction 1.5 --out " + q(dir.str("w")));
    EXPECT_EQ(result.exit_code, 2);
    EXPECT_NE(result.output.find("degrade_fraction"), std::string::npos) << result.output;
}

TEST(Gen, MissingOutputIsAUsageError) {
    const auto result = run_cli("gen --ids 4");
    EXPECT_EQ(result.exit_code, 2);
}

TEST(Rerank, WritesTheFullArtifactSet) {
    const fixtures::TempDir dir;
    ASSERT_EQ(run_cli(gen_args(dir.str("world"))).exit_code, 0);
    const auto result = run_cli("rerank --bundle " + q(dir.str("world")) + " --out " +
                                q(dir.str("art")) + " --k 4 --m-intermediaries 3 --csv");
    ASSERT_EQ(result.exit_code, 0) << result.output;

    for (const auto& name : faim::rerank_artifact_names())
        EXPECT_TRUE(fs::exists(dir.path() / "art" / (name + ".f32"))) << name;
    ASSERT_TRUE(fs::exists(dir.path() / "art" / "rerank_manifest.json"));

    const auto bundle = faim::load_bundle(dir.str("world"));
    const auto d_star = faim::load_rerank_matrix(dir.str("art"), "d_star");
    EXPECT_EQ(d_star.row_ids, bundle.query_ids());
    EXPECT_EQ(d_star.col_ids, bundle.gallery_ids());

    std::ifstream csv(dir.path() / "art" / "d_star.csv");
    std::string header;
    ASSERT_TRUE(std::getline(csv, header));
    EXPECT_EQ(header.rfind("row_id,", 0), 0u);
}

TEST(Rerank, FixedWeightsFillTheWeightArtifacts) {
    const fixtures::TempDir dir;
    ASSERT_EQ(run_cli(gen_args(dir.str("world"))).exit_code, 0);
    ASSERT_EQ(run_cli("rerank --bundle " + q(dir.str("world")) + " --out " + q(dir.str("art")) +
                      " --k 4 --m-intermediaries 3 --weights fixed:0.3,0.6,0.1")
                  .exit_code,
              0);
    const auto s_A = faim::load_rerank_matrix(dir.str("art"), "s_A");
    const auto lambda = faim::load_rerank_matrix(dir.str("art"), "lambda_o");
    for (double v : s_A.values) ASSERT_NEAR(v, 0.3, 1e-6);
    for (double v : lambda.values) ASSERT_NEAR(v, 2.0 / 3.0, 1e-6);
}

TEST(Rerank, ModesProduceDifferentFusions) {
    const fixtures::TempDir dir;
    ASSERT_EQ(run_cli(gen_args(dir.str("world"))).exit_code, 0);
    for (const std::string mode : {"kr", "gnn"})
        ASSERT_EQ(run_cli("rerank --bundle " + q(dir.str("world")) + " --out " +
                          q(dir.str(mode)) + " --mode " + mode + " --k 4 --m-intermediaries 3")
                      .exit_code,
                  0);
    const auto kr = faim::load_rerank_matrix(dir.str("kr"), "d_star");
    const auto gnn = faim::load_rerank_matrix(dir.str("gnn"), "d_star");
    double max_diff = 0.0;
    for (size_t i = 0; i < kr.values.size(); ++i)
        max_diff = std::max(max_diff, std::abs(kr.values[i] - gnn.values[i]));
    EXPECT_GT(max_diff, 1e-6);
}

// An artifact whose d_star already solves the problem: 0 on same-identity
// cells, 1 elsewhere.
void write_oracle_artifact(const faim::EmbeddingBundle& bundle, const fs::path& dir) {
    auto M = faim::DistanceMatrix::zeros(bundle.query_ids(), bundle.gallery_ids());
    for (int r = 0; r < M.rows; ++r)
        for (int c = 0; c < M.cols; ++c)
            if (bundle.meta(M.row_ids[r]).identity != bundle.meta(M.col_ids[c]).identity)
                M.values[static_cast<size_t>(r) * M.cols + c] = 1.0;
    faim::RerankOutput output;
    for (faim::RouteDistances* routes : {&output.raw, &output.unit}) {
        routes->d_A = M;
        routes->d_B = M;
        routes->d_C = M;
        routes->d_direct = M;
        routes->d_o = M;
    }
    output.weights = {M, M, M, M};
    output.d_star = M;
    faim::save_rerank_artifacts(output, dir, "", false);
}

TEST(Eval, OracleArtifactSaturatesTheMetrics) {
    const fixtures::TempDir dir;
    ASSERT_EQ(run_cli(gen_args(dir.str("world"))).exit_code, 0);
    write_oracle_artifact(faim::load_bundle(dir.str("world")), dir.path() / "art");
    const auto result = run_cli("eval --bundle " + q(dir.str("world")) + " --distances " +
                                q(dir.str("art")) + " --setting cc");
    ASSERT_EQ(result.exit_code, 0) << result.output;
    EXPECT_NE(result.output.find("\"top1\": 1.0"), std::string::npos) << result.output;
    EXPECT_NE(result.output.find("\"map\": 1.0"), std::string::npos) << result.output;
}

TEST(Eval, RerunsAreByteIdentical) {
    const fixtures::TempDir dir;
    ASSERT_EQ(run_cli(gen_args(dir.str("world"))).exit_code, 0);
    ASSERT_EQ(run_cli("rerank --bundle " + q(dir.str("world")) + " --out " + q(dir.str("art")) +
                      " --k 4 --m-intermediaries 3")
                  .exit_code,
              0);
    for (const std::string tag : {"r1", "r2"})
        ASSERT_EQ(run_cli("eval --bundle " + q(dir.str("world")) + " --distances " +
                          q(dir.str("art")) + " --setting cc --out " + q(dir.str(tag)))
                      .exit_code,
                  0);
    EXPECT_TRUE(same_bytes(dir.path() / "r1", dir.path() / "r2"));
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path);
    for (const auto& line : lines) out << line << '\n';
}

TEST(Eval, BrokenFeaturesAreADataError) {
    const fixtures::TempDir dir;
    write_lines(dir.path() / "bad.csv",
                {"identity,clothes,camera,role,reliability,o0,o1,ir0,ir1,re0,re1",
                 "0,0,0,q,1.0,nan,0,1,0,1,0", "0,1,1,g,1.0,0,1,0,1,0,1"});
    const auto result = run_cli("eval --bundle " + q(dir.str("bad.csv")) + " --distances " +
                                q(dir.str("missing")));
    EXPECT_EQ(result.exit_code, 3);
    EXPECT_NE(result.output.find("validation failed"), std::string::npos) << result.output;
}

TEST(Eval, FullyMaskedProtocolIsItsOwnFailure) {
    const fixtures::TempDir dir;
    // The only same-identity gallery sample shares the query's outfit, so
    // the clothes-changing setting masks everything.
    write_lines(dir.path() / "flat.csv",
                {"identity,clothes,camera,role,reliability,o0,o1,ir0,ir1,re0,re1",
                 "0,0,0,q,1.0,1,0,1,0,1,0", "0,0,1,g,1.0,0,1,0,1,0,1",
                 "7,9,1,g,1.0,1,0,1,0,1,0"});
    write_oracle_artifact(faim::load_bundle(dir.str("flat.csv")), dir.path() / "art");
    const auto result = run_cli("eval --bundle " + q(dir.str("flat.csv")) + " --distances " +
                                q(dir.str("art")) + " --setting cc");
    EXPECT_EQ(result.exit_code, 4);
    EXPECT_NE(result.output.find("protocol error"), std::string::npos) << result.output;
}

TEST(Ablate, LadderCoversEveryVariantAndMethod) {
    const fixtures::TempDir dir;
    ASSERT_EQ(run_cli("gen --ids 6 --clothes 2 --per 3 --d-o 8 --d-ir 8 --d-re 8 "
                      "--degrade-fraction 0.3 --degrade-strength 0.8 --seed 5 --out " +
                      q(dir.str("world")))
                  .exit_code,
              0);
    const auto result = run_cli("ablate --bundle " + q(dir.str("world")) + " --out " +
                                q(dir.str("report.json")) +
                                " --modes kr --settings cc --k 4 --m-intermediaries 3");
    ASSERT_EQ(result.exit_code, 0) << result.output;

    std::ifstream in(dir.path() / "report.json");
    const auto doc = nlohmann::json::parse(in);
    const auto& rows = doc.at("rows");
    ASSERT_EQ(rows.size(), 12u);  // 3 variants x 4 methods
    std::map<std::string, std::map<std::string, double>> map_by_variant;
    for (const auto& row : rows) {
        EXPECT_EQ(row.at("mode"), "kr");
        EXPECT_EQ(row.at("setting"), "cc");
        const double map = row.at("map").get<double>();
        EXPECT_GE(map, 0.0);
        EXPECT_LE(map, 1.0);
        map_by_variant[row.at("variant")][row.at("method")] = map;
    }
    for (const auto& variant : {"all", "drop_sc", "drop_rel"}) {
        ASSERT_EQ(map_by_variant[variant].size(), 4u) << variant;
        for (const auto& method : {"direct", "rerank_o", "im_fixed", "im_ibfw"})
            ASSERT_TRUE(map_by_variant[variant].count(method)) << method;
    }
    // Removing same-outfit mates changes at least one method's outcome.
    bool moved = false;
    for (const auto& [method, map] : map_by_variant["all"])
        if (map != map_by_variant["drop_sc"][method]) moved = true;
    EXPECT_TRUE(moved);
}

TEST(Ablate, NeedsAGeneratedBundle) {
    const fixtures::TempDir dir;
    write_lines(dir.path() / "flat.csv",
                {"identity,clothes,camera,role,reliability,o0,o1,ir0,ir1,re0,re1",
                 "0,0,0,q,1.0,1,0,1,0,1,0", "0,1,1,g,1.0,0,1,0,1,0,1"});
    const auto result = run_cli("ablate --bundle " + q(dir.str("flat.csv")));
    EXPECT_EQ(result.exit_code, 2);
    EXPECT_NE(result.output.find("config error"), std::string::npos) << result.output;
}

TEST(OracleCheck, SmallSweepPasses) {
    const auto result = run_cli("oracle-check --seeds 1 --n 40 --k 4");
    ASSERT_EQ(result.exit_code, 0) << result.output;
    EXPECT_NE(result.output.find("oracle-check: PASS"), std::string::npos) << result.output;
    EXPECT_NE(result.output.find("comparisons"), std::string::npos);
}

TEST(OracleCheck, InjectedFaultIsCaught) {
    const auto result = run_cli("oracle-check --seeds 1 --n 40 --k 4 --inject-fault");
    EXPECT_EQ(result.exit_code, 1);
    EXPECT_NE(result.output.find("oracle-check: FAIL"), std::string::npos) << result.output;
    EXPECT_NE(result.output.find("d_star"), std::string::npos);
}

}  // namespace
