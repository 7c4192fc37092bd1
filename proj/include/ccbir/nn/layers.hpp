#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccbir/nn/tensor.hpp"

namespace ccbir::nn {

/// Named view of one parameter array and its gradient accumulator.
/// Collected in a fixed order; that order defines initialization and
/// checkpoint layout.
struct Param {
    std::string name;
    std::vector<double>* value;
    std::vector<double>* grad;
};

/// 2-D convolution with bias. Forward is im2col + GEMM; a Cache captures
/// what the backward pass needs, so const forwards stay safe for
/// concurrent callers.
class Conv2d {
  public:
    struct Cache {
        std::vector<double> cols;  // (in_ch*k*k) x (oh*ow), column-major
        int in_h = 0, in_w = 0;
        int oh = 0, ow = 0;
    };

    Conv2d() = default;
    Conv2d(std::string name, int in_ch, int out_ch, int kernel, int stride,
           int pad);

    Tensor forward(const Tensor& x, Cache* cache = nullptr) const;
    /// Accumulates weight/bias gradients, returns gradient w.r.t. input.
    Tensor backward(const Tensor& dy, const Cache& cache);

    void collect_params(std::vector<Param>& out);
    void zero_grad();

    int out_height(int in_h) const { return (in_h + 2 * pad_ - kernel_) / stride_ + 1; }
    int out_width(int in_w) const { return (in_w + 2 * pad_ - kernel_) / stride_ + 1; }
    int in_channels() const { return in_ch_; }
    int out_channels() const { return out_ch_; }
    std::size_t param_count() const { return w.size() + b.size(); }
    const std::string& name() const { return name_; }

    std::vector<double> w;   // out_ch x (in_ch*k*k), row-major
    std::vector<double> b;   // out_ch
    std::vector<double> gw;
    std::vector<double> gb;

  private:
    std::string name_;
    int in_ch_ = 0, out_ch_ = 0, kernel_ = 0, stride_ = 1, pad_ = 0;
};

/// Fully connected layer on flat vectors.
class Linear {
  public:
    struct Cache {
        std::vector<double> x;
    };

    Linear() = default;
    Linear(std::string name, int in_dim, int out_dim);

    std::vector<double> forward(const std::vector<double>& x,
                                Cache* cache = nullptr) const;
    std::vector<double> backward(const std::vector<double>& dy,
                                 const Cache& cache);

    void collect_params(std::vector<Param>& out);
    void zero_grad();

    int in_dim() const { return in_dim_; }
    int out_dim() const { return out_dim_; }
    std::size_t param_count() const { return w.size() + b.size(); }

    std::vector<double> w;  // out_dim x in_dim, row-major
    std::vector<double> b;
    std::vector<double> gw;
    std::vector<double> gb;

  private:
    std::string name_;
    int in_dim_ = 0, out_dim_ = 0;
};

/// Max pooling (kernel x kernel, given stride/pad). Cache stores argmax
/// positions for the backward scatter.
class MaxPool2d {
  public:
    struct Cache {
        std::vector<int> argmax;  // flat index into the input plane, per output
        int in_h = 0, in_w = 0;
    };

    MaxPool2d() = default;
    MaxPool2d(int kernel, int stride, int pad)
        : kernel_(kernel), stride_(stride), pad_(pad) {}

    Tensor forward(const Tensor& x, Cache* cache = nullptr) const;
    Tensor backward(const Tensor& dy, int channels, const Cache& cache) const;

  private:
    int kernel_ = 2, stride_ = 2, pad_ = 0;
};

// ReLU kept as free functions; the mask is the whole cache.
Tensor relu(const Tensor& x, std::vector<unsigned char>* mask = nullptr);
Tensor relu_backward(const Tensor& dy, const std::vector<unsigned char>& mask);

/// Bilinear resampling of every channel to th x tw (half-pixel centers,
/// edge clamp — same kernel as the image pipeline). The backward pass is
/// the exact transpose (weight scatter).
Tensor resize_bilinear(const Tensor& x, int th, int tw);
Tensor resize_bilinear_backward(const Tensor& dy, int in_h, int in_w);

std::vector<double> global_avg_pool(const Tensor& x);
Tensor global_avg_pool_backward(const std::vector<double>& dv, int h, int w);

}  // namespace ccbir::nn
