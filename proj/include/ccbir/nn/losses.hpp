#pragma once

#include <vector>

namespace ccbir::nn {

/// Numerically stable softmax.
std::vector<double> softmax(const std::vector<double>& logits);

/// Single-label cross-entropy on raw logits. Returns the loss; if dlogits
/// is non-null it receives d loss / d logits (= softmax - onehot).
double cross_entropy(const std::vector<double>& logits, int target,
                     std::vector<double>* dlogits = nullptr);

/// Multi-label alternative: sum over classes of sigmoid binary
/// cross-entropy against a multi-hot target.
double binary_cross_entropy(const std::vector<double>& logits,
                            const std::vector<int>& multi_hot,
                            std::vector<double>* dlogits = nullptr);

}  // namespace ccbir::nn
