#include "relief/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "relief/errors.hpp"

namespace relief {

namespace {
constexpr char kMagic[8] = {'R', 'L', 'F', 'C', 'K', 'P', 'T', '1'};
}

void save_checkpoint(const std::string& path, const ParamSet& params, const nlohmann::json& meta) {
    nlohmann::json header;
    header["format"] = 1;
    header["order"] = "column-major";
    header["meta"] = meta;
    uint64_t offset = 0;
    nlohmann::json plist = nlohmann::json::array();
    for (size_t i = 0; i < params.size(); ++i) {
        const Mat& m = params.values()[i];
        plist.push_back({{"name", params.names()[i]},
                         {"rows", m.rows()},
                         {"cols", m.cols()},
                         {"offset", offset}});
        offset += static_cast<uint64_t>(m.size()) * sizeof(double);
    }
    header["params"] = plist;
    const std::string hs = header.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write checkpoint: " + path);
    f.write(kMagic, sizeof(kMagic));
    const uint64_t hlen = hs.size();
    f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const Mat& m : params.values())
        f.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!f) throw IoError("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read checkpoint: " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError("not a checkpoint file: " + path);
    uint64_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string hs(hlen, '\0');
    f.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (!f) throw IoError("truncated checkpoint header: " + path);

    nlohmann::json header = nlohmann::json::parse(hs, nullptr, false);
    if (header.is_discarded()) throw IoError("corrupt checkpoint header: " + path);
    if (header.value("format", 0) != 1) throw IoError("unsupported checkpoint format in " + path);

    Checkpoint ck;
    ck.meta = header.value("meta", nlohmann::json::object());
    for (const auto& p : header["params"]) {
        Mat m(p["rows"].get<Eigen::Index>(), p["cols"].get<Eigen::Index>());
        f.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
        if (!f) throw IoError("truncated checkpoint payload: " + path);
        ck.params.add(p["name"].get<std::string>(), std::move(m));
    }
    return ck;
}

}  // namespace relief
