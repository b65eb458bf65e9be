#include "faim/matrix_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "faim/errors.hpp"

namespace faim {

namespace {

using nlohmann::ordered_json;

constexpr const char* kManifestName = "rerank_manifest.json";

void write_file(const std::filesystem::path& path, const char* data, size_t bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(path.string(), 0, "cannot open for writing");
    out.write(data, static_cast<std::streamsize>(bytes));
    if (!out) throw FormatError(path.string(), 0, "write failed");
}

const DistanceMatrix* matrix_by_name(const RerankOutput& output, const std::string& name) {
    if (name == "d_A") return &output.unit.d_A;
    if (name == "d_B") return &output.unit.d_B;
    if (name == "d_C") return &output.unit.d_C;
    if (name == "d_direct") return &output.unit.d_direct;
    if (name == "d_o") return &output.unit.d_o;
    if (name == "s_A") return &output.weights.s_A;
    if (name == "s_B") return &output.weights.s_B;
    if (name == "s_C") return &output.weights.s_C;
    if (name == "lambda_o") return &output.weights.lambda_o;
    if (name == "d_star") return &output.d_star;
    return nullptr;
}

}  // namespace

void save_matrix_f32(const DistanceMatrix& matrix, const std::filesystem::path& path) {
    std::vector<float> narrow(matrix.values.size());
    for (size_t i = 0; i < narrow.size(); ++i) narrow[i] = static_cast<float>(matrix.values[i]);
    write_file(path, reinterpret_cast<const char*>(narrow.data()),
               narrow.size() * sizeof(float));
}

DistanceMatrix load_matrix_f32(const std::filesystem::path& path, std::vector<int> row_ids,
                               std::vector<int> col_ids) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw FormatError(path.string(), 0, "cannot open");
    const auto bytes = static_cast<size_t>(in.tellg());
    const size_t expected = row_ids.size() * col_ids.size() * sizeof(float);
    if (bytes != expected)
        throw DimMismatch("matrix file " + path.string() + " holds " + std::to_string(bytes) +
                          " bytes, manifest expects " + std::to_string(expected));
    in.seekg(0);
    std::vector<float> narrow(row_ids.size() * col_ids.size());
    in.read(reinterpret_cast<char*>(narrow.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw FormatError(path.string(), 0, "short read");
    DistanceMatrix out = DistanceMatrix::zeros(std::move(row_ids), std::move(col_ids));
    for (size_t i = 0; i < narrow.size(); ++i) out.values[i] = narrow[i];
    return out;
}

void save_matrix_csv(const DistanceMatrix& matrix, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError(path.string(), 0, "cannot open for writing");
    out << "row_id";
    for (int c = 0; c < matrix.cols; ++c) out << ',' << matrix.col_ids[c];
    out << '\n';
    out.precision(9);
    for (int r = 0; r < matrix.rows; ++r) {
        out << matrix.row_ids[r];
        for (int c = 0; c < matrix.cols; ++c) out << ',' << matrix.at(r, c);
        out << '\n';
    }
    if (!out) throw FormatError(path.string(), 0, "write failed");
}

std::vector<std::string> rerank_artifact_names() {
    return {"d_A", "d_B", "d_C", "d_direct", "d_o", "s_A", "s_B", "s_C", "lambda_o", "d_star"};
}

void save_rerank_artifacts(const RerankOutput& output, const std::filesystem::path& dir,
                           const std::string& config_echo_json, bool also_csv) {
    std::filesystem::create_directories(dir);
    ordered_json manifest;
    manifest["version"] = 1;
    manifest["rows"] = output.d_star.rows;
    manifest["cols"] = output.d_star.cols;
    manifest["row_ids"] = output.d_star.row_ids;
    manifest["col_ids"] = output.d_star.col_ids;
    manifest["mode"] = output.unit.mode == ImMode::Gnn ? "gnn" : "kr";
    ordered_json files = ordered_json::object();
    for (const auto& name : rerank_artifact_names()) {
        const DistanceMatrix* m = matrix_by_name(output, name);
        save_matrix_f32(*m, dir / (name + ".f32"));
        files[name] = name + ".f32";
        if (also_csv) save_matrix_csv(*m, dir / (name + ".csv"));
    }
    manifest["matrices"] = files;
    if (!config_echo_json.empty()) manifest["config"] = ordered_json::parse(config_echo_json);
    const std::string text = manifest.dump(2) + "\n";
    write_file(dir / kManifestName, text.data(), text.size());
}

std::string read_rerank_manifest(const std::filesystem::path& dir) {
    std::ifstream in(dir / kManifestName);
    if (!in) throw FormatError((dir / kManifestName).string(), 0, "cannot open");
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

DistanceMatrix load_rerank_matrix(const std::filesystem::path& dir, const std::string& name) {
    ordered_json manifest;
    try {
        manifest = ordered_json::parse(read_rerank_manifest(dir));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError((dir / kManifestName).string(), e.byte, "manifest is not valid JSON");
    }
    if (!manifest.contains("matrices") || !manifest["matrices"].contains(name))
        throw FormatError((dir / kManifestName).string(), 0,
                          "manifest lists no matrix named '" + name + "'");
    std::vector<int> row_ids = manifest["row_ids"].get<std::vector<int>>();
    std::vector<int> col_ids = manifest["col_ids"].get<std::vector<int>>();
    const std::string file = manifest["matrices"][name].get<std::string>();
    return load_matrix_f32(dir / file, std::move(row_ids), std::move(col_ids));
}

}  // namespace faim
