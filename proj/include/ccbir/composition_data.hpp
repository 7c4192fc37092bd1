#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ccbir/image.hpp"

namespace ccbir {

inline constexpr int kNumCompositionClasses = 9;

/// The nine composition categories, in canonical order. These exact strings
/// appear in label manifests and checkpoints.
const std::array<std::string, kNumCompositionClasses>& composition_class_names();

/// Index of a class name (underscores are accepted in place of spaces).
/// Unknown names raise DataError.
int composition_class_index(const std::string& name);

/// Multi-hot label over the nine classes; at least one bit set.
struct CompositionLabel {
    std::array<int, kNumCompositionClasses> classes{};

    bool is_set(int idx) const { return classes[idx] != 0; }
    void set(int idx) { classes[idx] = 1; }
    int count() const;
    /// Index of the first set class; training uses this in single-label mode.
    int first() const;
    std::vector<int> as_vector() const;
};

enum class Split { kTrain, kTest };

struct CompositionSample {
    GrayscaleImage image;  // preprocessed: 256x256, values in [0,1]
    CompositionLabel label;
    Split split = Split::kTrain;
};

/// Per-class counts and skip statistics emitted by the loader so the source
/// imbalance can be audited.
struct CompositionLoadStats {
    std::array<int, kNumCompositionClasses> train_counts{};
    std::array<int, kNumCompositionClasses> test_counts{};
    int train_total = 0;
    int test_total = 0;
    int skipped = 0;
    std::vector<std::string> warnings;

    double train_percent(int cls) const;
    double test_percent(int cls) const;
};

struct CompositionDataset {
    std::vector<CompositionSample> samples;
    CompositionLoadStats stats;
};

/// Load a KU-PCP-style dataset. Two layouts are accepted:
///   1. a `manifest.csv` at the root with header `path,split,labels`
///      (labels are `;`-separated class names, paths relative to root);
///   2. per-class directories `root/{train,test}/<class name>/*`.
/// Unreadable images are skipped with a warning; unknown class names or a
/// malformed manifest raise DataError.
CompositionDataset load_kupcp(const std::string& root);

/// Deterministic synthetic stand-in: renders one unambiguous geometric
/// archetype per class (horizon band, centered disc, corner-to-corner
/// diagonal, ...) onto a noise background. Single-label, exactly
/// n_per_class samples per class, all preprocessed to 256x256.
std::vector<CompositionSample> generate_synthetic_composition(
    int n_per_class, std::uint64_t seed, Split split = Split::kTrain);

}  // namespace ccbir
