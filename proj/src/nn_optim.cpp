#include "ccbir/nn/optim.hpp"

#include <cmath>

#include "ccbir/common.hpp"

namespace ccbir::nn {

void xavier_fill(std::vector<double>& w, int fan_in, int fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& x : w) {
        x = uniform_range(rng, -a, a);
    }
}

void Adam::step(const std::vector<Param>& params) {
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i].value->size(), 0.0);
            v_[i].assign(params[i].value->size(), 0.0);
        }
    }
    if (m_.size() != params.size()) {
        throw ShapeError("Adam: parameter list changed between steps");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& w = *params[i].value;
        const auto& g = *params[i].grad;
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            w[j] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
        }
    }
}

void Adam::reset() {
    t_ = 0;
    m_.clear();
    v_.clear();
}

}  // namespace ccbir::nn
