#pragma once

#include <cstdint>
#include <string>

namespace ccbir {

/// Shared optimizer/loop settings for both networks. Desk-scale defaults;
/// everything is overridable from the CLI config.
struct Hyperparams {
    double learning_rate = 1e-3;
    int batch_size = 16;
    int epochs = 30;
    std::uint64_t seed = 0;
    std::string optimizer = "adam";
    double margin = 0.0;  // negative-pair slack of the cosine embedding loss
    double l_kcm = 0.5;

    void validate() const;
};

}  // namespace ccbir
