#pragma once

#include <cstdint>
#include <vector>

#include "ccbir/nn/layers.hpp"
#include "ccbir/rng.hpp"

namespace ccbir::nn {

/// Glorot-uniform fill: w ~ U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
void xavier_fill(std::vector<double>& w, int fan_in, int fan_out, Rng& rng);

class Adam {
  public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    /// One update over all params: w -= lr * m_hat / (sqrt(v_hat) + eps).
    /// State is keyed by position, so the param list must be stable.
    void step(const std::vector<Param>& params);
    void reset();
    std::int64_t steps() const { return t_; }

  private:
    double lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

inline void zero_grads(const std::vector<Param>& params) {
    for (const auto& p : params) {
        std::fill(p.grad->begin(), p.grad->end(), 0.0);
    }
}

inline void scale_grads(const std::vector<Param>& params, double s) {
    for (const auto& p : params) {
        for (double& g : *p.grad) g *= s;
    }
}

}  // namespace ccbir::nn
