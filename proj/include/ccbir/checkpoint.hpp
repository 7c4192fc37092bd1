#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace ccbir {

/// Versioned checkpoint container: a JSON header (architecture tag, class
/// names, preprocessing fingerprint, config echo) followed by named float64
/// parameter blobs, little-endian, in insertion order. Writes are
/// temp-then-rename and byte-deterministic for identical contents.
class Checkpoint {
  public:
    struct Entry {
        std::string name;
        std::vector<int> shape;
        std::vector<double> data;
    };

    nlohmann::json meta = nlohmann::json::object();

    void add(const std::string& name, std::vector<int> shape,
             std::vector<double> data);
    bool has(const std::string& name) const;
    const Entry& entry(const std::string& name) const;
    const std::vector<double>& tensor(const std::string& name) const;
    const std::vector<Entry>& entries() const { return entries_; }

    /// FNV-1a over the parameter blob bytes, entry order. Identifies the
    /// exact weights an index or report was produced with.
    std::uint64_t fingerprint() const;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

  private:
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace ccbir
