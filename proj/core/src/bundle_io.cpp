#include "faim/bundle_io.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace faim {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kFormatVersion = 1;
constexpr int kCsvSampleLimit = 1000;

std::string role_tag(Role r) { return r == Role::Query ? "q" : "g"; }

Role parse_role(const std::string& tag, int index) {
    if (tag == "q") return Role::Query;
    if (tag == "g") return Role::Gallery;
    throw FormatError("role[" + std::to_string(index) + "]", -1,
                      "expected \"q\" or \"g\", got \"" + tag + "\"");
}

template <typename T>
std::vector<T> int_array(const json& j, const std::string& field, std::size_t n) {
    if (!j.contains(field)) throw FormatError(field, -1, "missing field");
    const auto& arr = j.at(field);
    if (!arr.is_array() || arr.size() != n) {
        throw FormatError(field, -1,
                          "expected array of length " + std::to_string(n));
    }
    std::vector<T> out;
    out.reserve(n);
    for (const auto& v : arr) {
        if (!v.is_number_integer()) throw FormatError(field, -1, "expected integer");
        out.push_back(v.get<T>());
    }
    return out;
}

}  // namespace

void save_bundle(const EmbeddingBundle& bundle, const fs::path& dir,
                 const std::string& extra_manifest_json) {
    fs::create_directories(dir);
    const int n = bundle.size();
    const auto& dims = bundle.dims();

    ordered_json manifest;
    manifest["version"] = kFormatVersion;
    manifest["n"] = n;
    manifest["d_o"] = dims.d_o;
    manifest["d_ir"] = dims.d_ir;
    manifest["d_re"] = dims.d_re;
    ordered_json identity = ordered_json::array();
    ordered_json clothes = ordered_json::array();
    ordered_json camera = ordered_json::array();
    ordered_json role = ordered_json::array();
    ordered_json reliability = ordered_json::array();
    for (int i = 0; i < n; ++i) {
        const auto& m = bundle.meta(i);
        identity.push_back(m.identity);
        clothes.push_back(m.clothes);
        camera.push_back(m.camera);
        role.push_back(role_tag(m.role));
        reliability.push_back(bundle.reliability(i));
    }
    manifest["identity"] = std::move(identity);
    manifest["clothes"] = std::move(clothes);
    manifest["camera"] = std::move(camera);
    manifest["role"] = std::move(role);
    manifest["reliability"] = std::move(reliability);
    if (!extra_manifest_json.empty()) {
        json extra = json::parse(extra_manifest_json);
        for (auto it = extra.begin(); it != extra.end(); ++it) {
            manifest[it.key()] = it.value();
        }
    }

    {
        std::ofstream out(dir / "manifest.json");
        if (!out) throw FormatError("manifest.json", -1, "cannot open for writing");
        out << manifest.dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "features.bin", std::ios::binary);
        if (!out) throw FormatError("features.bin", -1, "cannot open for writing");
        for (int i = 0; i < n; ++i) {
            auto t = bundle.features(i);
            out.write(reinterpret_cast<const char*>(t.f_o.data()),
                      static_cast<std::streamsize>(t.f_o.size() * sizeof(float)));
            out.write(reinterpret_cast<const char*>(t.f_ir.data()),
                      static_cast<std::streamsize>(t.f_ir.size() * sizeof(float)));
            out.write(reinterpret_cast<const char*>(t.f_re.data()),
                      static_cast<std::streamsize>(t.f_re.size() * sizeof(float)));
        }
    }
}

std::string read_bundle_manifest(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw FormatError("manifest.json", -1, "cannot open " + (dir / "manifest.json").string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

namespace {

EmbeddingBundle load_bundle_dir(const fs::path& dir) {
    json manifest;
    try {
        manifest = json::parse(read_bundle_manifest(dir));
    } catch (const json::parse_error& e) {
        throw FormatError("manifest.json", static_cast<long long>(e.byte), e.what());
    }

    auto require_int = [&manifest](const char* field) {
        if (!manifest.contains(field) || !manifest.at(field).is_number_integer()) {
            throw FormatError(field, -1, "missing or non-integer field");
        }
        return manifest.at(field).get<std::int64_t>();
    };
    const auto version = require_int("version");
    if (version != kFormatVersion) {
        throw FormatError("version", -1,
                          "unsupported version " + std::to_string(version));
    }
    const auto n64 = require_int("n");
    if (n64 <= 0) throw FormatError("n", -1, "sample count must be positive");
    const std::size_t n = static_cast<std::size_t>(n64);
    BundleDims dims;
    dims.d_o = static_cast<int>(require_int("d_o"));
    dims.d_ir = static_cast<int>(require_int("d_ir"));
    dims.d_re = static_cast<int>(require_int("d_re"));
    if (dims.d_o <= 0 || dims.d_ir <= 0 || dims.d_re <= 0) {
        throw FormatError("d_o", -1, "dimensions must be positive");
    }

    auto identity = int_array<std::int32_t>(manifest, "identity", n);
    auto clothes = int_array<std::int32_t>(manifest, "clothes", n);
    auto camera = int_array<std::int32_t>(manifest, "camera", n);

    if (!manifest.contains("role") || !manifest.at("role").is_array() ||
        manifest.at("role").size() != n) {
        throw FormatError("role", -1, "expected array of length " + std::to_string(n));
    }
    if (!manifest.contains("reliability") || !manifest.at("reliability").is_array() ||
        manifest.at("reliability").size() != n) {
        throw FormatError("reliability", -1,
                          "expected array of length " + std::to_string(n));
    }

    std::vector<SampleMeta> metas(n);
    std::vector<double> reliability(n);
    for (std::size_t i = 0; i < n; ++i) {
        metas[i].sample_id = static_cast<std::int32_t>(i);
        metas[i].identity = identity[i];
        metas[i].clothes = clothes[i];
        metas[i].camera = camera[i];
        metas[i].role = parse_role(manifest.at("role")[i].get<std::string>(),
                                   static_cast<int>(i));
        const auto& r = manifest.at("reliability")[i];
        if (!r.is_number()) {
            throw FormatError("reliability[" + std::to_string(i) + "]", -1,
                              "expected number");
        }
        reliability[i] = r.get<double>();
    }

    const fs::path bin = dir / "features.bin";
    std::ifstream in(bin, std::ios::binary | std::ios::ate);
    if (!in) throw FormatError("features.bin", -1, "cannot open " + bin.string());
    const long long file_size = static_cast<long long>(in.tellg());
    const long long row_bytes =
        static_cast<long long>(dims.d_o + dims.d_ir + dims.d_re) *
        static_cast<long long>(sizeof(float));
    if (file_size % row_bytes != 0) {
        // Truncated mid-row: report the offset where the payload ends.
        throw FormatError("features.bin", file_size,
                          "payload truncated mid-row (row stride " +
                              std::to_string(row_bytes) + " bytes)");
    }
    const long long rows = file_size / row_bytes;
    if (rows != static_cast<long long>(n)) {
        throw DimMismatch("manifest declares n=" + std::to_string(n) +
                          " but features.bin holds " + std::to_string(rows) + " rows");
    }

    in.seekg(0);
    std::vector<float> fo(n * static_cast<std::size_t>(dims.d_o));
    std::vector<float> fir(n * static_cast<std::size_t>(dims.d_ir));
    std::vector<float> fre(n * static_cast<std::size_t>(dims.d_re));
    for (std::size_t i = 0; i < n; ++i) {
        auto read_row = [&in, i](std::vector<float>& dst, int d, const char* field) {
            in.read(reinterpret_cast<char*>(dst.data() + i * static_cast<std::size_t>(d)),
                    static_cast<std::streamsize>(d * sizeof(float)));
            if (!in) {
                throw FormatError(field, static_cast<long long>(in.gcount()),
                                  "short read at sample " + std::to_string(i));
            }
        };
        read_row(fo, dims.d_o, "features.bin:f_o");
        read_row(fir, dims.d_ir, "features.bin:f_ir");
        read_row(fre, dims.d_re, "features.bin:f_re");
    }

    return {std::move(metas), dims, std::move(fo), std::move(fir), std::move(fre),
            std::move(reliability)};
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

// Feature columns must appear as o0..o{d-1}, ir0.., re0.., each block
// contiguous and in index order.
int count_feature_block(const std::vector<std::string>& header, std::size_t start,
                        const std::string& prefix) {
    int d = 0;
    for (std::size_t i = start; i < header.size(); ++i) {
        const std::string expect = prefix + std::to_string(d);
        if (header[i] != expect) break;
        ++d;
    }
    if (d == 0) {
        throw FormatError("header", -1, "expected feature columns " + prefix + "0..");
    }
    return d;
}

}  // namespace

EmbeddingBundle load_bundle_csv(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw FormatError("csv", -1, "cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError("header", -1, "empty file");
    const auto header = split_csv_line(line);

    const std::vector<std::string> fixed = {"identity", "clothes", "camera", "role",
                                            "reliability"};
    if (header.size() < fixed.size() + 3) {
        throw FormatError("header", -1, "too few columns");
    }
    for (std::size_t i = 0; i < fixed.size(); ++i) {
        if (header[i] != fixed[i]) {
            throw FormatError("header", -1, "column " + std::to_string(i) +
                                                " must be '" + fixed[i] + "'");
        }
    }
    BundleDims dims;
    std::size_t col = fixed.size();
    dims.d_o = count_feature_block(header, col, "o");
    col += static_cast<std::size_t>(dims.d_o);
    dims.d_ir = count_feature_block(header, col, "ir");
    col += static_cast<std::size_t>(dims.d_ir);
    dims.d_re = count_feature_block(header, col, "re");
    col += static_cast<std::size_t>(dims.d_re);
    if (col != header.size()) {
        throw FormatError("header", -1, "unrecognized trailing columns");
    }

    std::vector<SampleMeta> metas;
    std::vector<float> fo, fir, fre;
    std::vector<double> reliability;
    int row_index = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (row_index >= kCsvSampleLimit) {
            throw FormatError("csv", -1, "csv fixtures are limited to " +
                                             std::to_string(kCsvSampleLimit) +
                                             " samples; use the binary format");
        }
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw FormatError("row " + std::to_string(row_index), -1,
                              "expected " + std::to_string(header.size()) +
                                  " cells, got " + std::to_string(cells.size()));
        }
        SampleMeta m;
        m.sample_id = row_index;
        try {
            m.identity = std::stoi(cells[0]);
            m.clothes = std::stoi(cells[1]);
            m.camera = std::stoi(cells[2]);
        } catch (const std::exception&) {
            throw FormatError("row " + std::to_string(row_index), -1,
                              "non-integer label");
        }
        m.role = parse_role(cells[3], row_index);
        std::size_t c = 4;
        try {
            reliability.push_back(std::stod(cells[c]));
            ++c;
            for (int j = 0; j < dims.d_o; ++j) fo.push_back(std::stof(cells[c++]));
            for (int j = 0; j < dims.d_ir; ++j) fir.push_back(std::stof(cells[c++]));
            for (int j = 0; j < dims.d_re; ++j) fre.push_back(std::stof(cells[c++]));
        } catch (const std::exception&) {
            throw FormatError("row " + std::to_string(row_index), -1,
                              "non-numeric value in column " + std::to_string(c));
        }
        metas.push_back(m);
        ++row_index;
    }
    if (metas.empty()) throw FormatError("csv", -1, "no sample rows");
    return {std::move(metas), dims, std::move(fo), std::move(fir), std::move(fre),
            std::move(reliability)};
}

EmbeddingBundle load_bundle(const fs::path& path) {
    if (fs::is_directory(path)) return load_bundle_dir(path);
    if (path.extension() == ".csv") return load_bundle_csv(path);
    throw FormatError("path", -1,
                      path.string() + " is neither a bundle directory nor a .csv file");
}

}  // namespace faim
