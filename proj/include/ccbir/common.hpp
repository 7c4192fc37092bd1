#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ccbir {

inline constexpr const char* kToolName = "ccbir";
inline constexpr const char* kToolVersion = "0.1.0";

// Error taxonomy shared by all modules. The CLI maps these onto exit codes
// (config=2, data=3, numeric=4); anything else is a plain failure.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/vector dimension mismatches. A data problem: it means two artifacts
// that were never meant to be combined (wrong checkpoint, wrong map size).
struct ShapeError : DataError {
    explicit ShapeError(const std::string& msg) : DataError(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Model used before weights were initialized or loaded.
struct NotReadyError : ConfigError {
    explicit NotReadyError(const std::string& msg) : ConfigError(msg) {}
};

// FNV-1a 64-bit. Used for checkpoint/index fingerprints, not security.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t seed = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t value);

}  // namespace ccbir
