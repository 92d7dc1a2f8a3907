#include "fedlf/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fedlf {
namespace {

constexpr char kMagic[8] = {'F', 'L', 'C', 'K', 'P', 'T', '0', '\n'};

void put_u64le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

void put_f64le(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    put_u64le(out, bits);
}

double get_f64le(const unsigned char* p) {
    std::uint64_t bits = get_u64le(p);
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
}

}  // namespace

int Checkpoint::find(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    if (ckpt.names.size() != ckpt.values.size())
        throw std::invalid_argument("checkpoint: names/values size mismatch");

    nlohmann::json header;
    header["version"] = 1;
    header["entries"] = nlohmann::json::array();
    for (std::size_t i = 0; i < ckpt.names.size(); ++i) {
        const Matrix& m = ckpt.values[i];
        header["entries"].push_back(
            {{"name", ckpt.names[i]}, {"shape", {m.rows, m.cols}}});
    }
    header["meta"] = ckpt.meta;
    const std::string header_bytes = header.dump();

    std::string blob;
    blob.reserve(16 + header_bytes.size());
    blob.append(kMagic, sizeof kMagic);
    put_u64le(blob, header_bytes.size());
    blob += header_bytes;
    for (const Matrix& m : ckpt.values)
        for (double d : m.data) put_f64le(blob, d);

    // Write to a sibling temp file, then rename: readers never see a torn file.
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("checkpoint: cannot open " + tmp);
        out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
        if (!out) throw std::runtime_error("checkpoint: write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("checkpoint: rename failed for " + path);
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    std::string blob((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());

    if (blob.size() < sizeof kMagic + 8 ||
        std::memcmp(blob.data(), kMagic, sizeof kMagic) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);

    const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
    const std::uint64_t header_len = get_u64le(bytes + sizeof kMagic);
    std::size_t pos = sizeof kMagic + 8;
    if (pos + header_len > blob.size())
        throw std::runtime_error("checkpoint: truncated header in " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(blob.substr(pos, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("checkpoint: header parse error in " + path +
                                 ": " + e.what());
    }
    pos += header_len;

    Checkpoint ckpt;
    if (header.contains("meta"))
        ckpt.meta = header["meta"].get<std::map<std::string, std::string>>();
    for (const auto& entry : header.at("entries")) {
        const std::string name = entry.at("name").get<std::string>();
        const int rows = entry.at("shape").at(0).get<int>();
        const int cols = entry.at("shape").at(1).get<int>();
        if (rows < 0 || cols < 0)
            throw std::runtime_error("checkpoint: bad shape for " + name);
        const std::size_t n = static_cast<std::size_t>(rows) * cols;
        if (pos + 8 * n > blob.size())
            throw std::runtime_error("checkpoint: truncated payload at entry " +
                                     name + " in " + path);
        Matrix m = Matrix::zeros(rows, cols);
        for (std::size_t i = 0; i < n; ++i) m.data[i] = get_f64le(bytes + pos + 8 * i);
        pos += 8 * n;
        ckpt.names.push_back(name);
        ckpt.values.push_back(std::move(m));
    }
    if (pos != blob.size())
        throw std::runtime_error("checkpoint: trailing bytes in " + path);
    return ckpt;
}

void save_params(const ModelParams& params, const std::string& path) {
    Checkpoint ckpt;
    ckpt.names = params.names;
    ckpt.values = params.values;
    save_checkpoint(ckpt, path);
}

ModelParams load_params(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    ModelParams params;
    params.names = std::move(ckpt.names);
    params.values = std::move(ckpt.values);
    return params;
}

}  // namespace fedlf
