#include "ccbir/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "ccbir/common.hpp"

namespace ccbir {

namespace {
constexpr char kMagic[8] = {'C', 'C', 'B', 'I', 'R', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}
}  // namespace

void Checkpoint::add(const std::string& name, std::vector<int> shape,
                     std::vector<double> data) {
    if (index_.count(name)) {
        throw DataError("checkpoint: duplicate tensor name " + name);
    }
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    if (n != data.size()) {
        throw ShapeError("checkpoint: shape/data mismatch for " + name);
    }
    index_[name] = entries_.size();
    entries_.push_back({name, std::move(shape), std::move(data)});
}

bool Checkpoint::has(const std::string& name) const {
    return index_.count(name) > 0;
}

const Checkpoint::Entry& Checkpoint::entry(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
        throw DataError("checkpoint: missing tensor " + name);
    }
    return entries_[it->second];
}

const std::vector<double>& Checkpoint::tensor(const std::string& name) const {
    return entry(name).data;
}

std::uint64_t Checkpoint::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& e : entries_) {
        h = fnv1a64(e.data.data(), e.data.size() * sizeof(double), h);
    }
    return h;
}

void Checkpoint::save(const std::string& path) const {
    nlohmann::json header;
    header["format_version"] = kVersion;
    header["meta"] = meta;
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& e : entries_) {
        tensors.push_back({{"name", e.name}, {"shape", e.shape}});
    }
    header["tensors"] = tensors;
    const std::string js = header.dump();

    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("checkpoint: cannot open " + tmp);
        f.write(kMagic, sizeof(kMagic));
        write_raw(f, kVersion);
        write_raw(f, static_cast<std::uint64_t>(js.size()));
        f.write(js.data(), js.size());
        for (const auto& e : entries_) {
            f.write(reinterpret_cast<const char*>(e.data.data()),
                    e.data.size() * sizeof(double));
        }
        if (!f) throw DataError("checkpoint: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("checkpoint: cannot open " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw DataError("checkpoint: bad magic in " + path);
    }
    const auto version = read_raw<std::uint32_t>(f);
    if (version != kVersion) {
        throw DataError("checkpoint: unsupported version " +
                        std::to_string(version) + " in " + path);
    }
    const auto js_len = read_raw<std::uint64_t>(f);
    std::string js(js_len, '\0');
    f.read(js.data(), static_cast<std::streamsize>(js_len));
    if (!f) throw DataError("checkpoint: truncated header in " + path);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(js);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint: corrupt header in " + path + ": " +
                        e.what());
    }

    Checkpoint ckpt;
    ckpt.meta = header.value("meta", nlohmann::json::object());
    for (const auto& t : header.at("tensors")) {
        const std::string name = t.at("name").get<std::string>();
        std::vector<int> shape = t.at("shape").get<std::vector<int>>();
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        std::vector<double> data(n);
        f.read(reinterpret_cast<char*>(data.data()),
               static_cast<std::streamsize>(n * sizeof(double)));
        if (!f) throw DataError("checkpoint: truncated blob in " + path);
        ckpt.add(name, std::move(shape), std::move(data));
    }
    return ckpt;
}

}  // namespace ccbir
