#include "ccbir/nn/losses.hpp"

#include <algorithm>
#include <cmath>

#include "ccbir/common.hpp"

namespace ccbir::nn {

std::vector<double> softmax(const std::vector<double>& logits) {
    std::vector<double> p(logits.size());
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double& x : p) x /= sum;
    return p;
}

double cross_entropy(const std::vector<double>& logits, int target,
                     std::vector<double>* dlogits) {
    if (target < 0 || target >= static_cast<int>(logits.size())) {
        throw ShapeError("cross_entropy: target " + std::to_string(target) +
                         " out of range for " + std::to_string(logits.size()) +
                         " classes");
    }
    const std::vector<double> p = softmax(logits);
    const double loss = -std::log(std::max(p[target], 1e-300));
    if (dlogits) {
        *dlogits = p;
        (*dlogits)[target] -= 1.0;
    }
    return loss;
}

double binary_cross_entropy(const std::vector<double>& logits,
                            const std::vector<int>& multi_hot,
                            std::vector<double>* dlogits) {
    if (logits.size() != multi_hot.size()) {
        throw ShapeError("binary_cross_entropy: logits/target size mismatch");
    }
    if (dlogits) dlogits->assign(logits.size(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double z = logits[i];
        const double y = multi_hot[i] ? 1.0 : 0.0;
        // log(1 + e^z) computed without overflow.
        const double softplus = z > 0 ? z + std::log1p(std::exp(-z))
                                      : std::log1p(std::exp(z));
        loss += softplus - y * z;
        if (dlogits) {
            const double sig = 1.0 / (1.0 + std::exp(-z));
            (*dlogits)[i] = sig - y;
        }
    }
    return loss;
}

}  // namespace ccbir::nn
