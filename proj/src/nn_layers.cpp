#include "ccbir/nn/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "ccbir/common.hpp"

namespace ccbir::nn {

namespace {

using MatMap = Eigen::Map<Eigen::MatrixXd>;            // column-major
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMat>;

void im2col(const Tensor& x, int kernel, int stride, int pad, int oh, int ow,
            std::vector<double>& cols) {
    const int rows = x.c * kernel * kernel;
    cols.assign(static_cast<std::size_t>(rows) * oh * ow, 0.0);
    // Column-major: element (r, col) at cols[col*rows + r].
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const std::size_t base =
                (static_cast<std::size_t>(oy) * ow + ox) * rows;
            for (int ci = 0; ci < x.c; ++ci) {
                const double* plane = x.channel(ci);
                for (int ky = 0; ky < kernel; ++ky) {
                    const int iy = oy * stride - pad + ky;
                    const int r0 = (ci * kernel + ky) * kernel;
                    if (iy < 0 || iy >= x.h) continue;
                    const double* row = plane + static_cast<std::size_t>(iy) * x.w;
                    for (int kx = 0; kx < kernel; ++kx) {
                        const int ix = ox * stride - pad + kx;
                        if (ix < 0 || ix >= x.w) continue;
                        cols[base + r0 + kx] = row[ix];
                    }
                }
            }
        }
    }
}

Tensor col2im(const std::vector<double>& dcols, int channels, int in_h,
              int in_w, int kernel, int stride, int pad, int oh, int ow) {
    Tensor dx(channels, in_h, in_w);
    const int rows = channels * kernel * kernel;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const std::size_t base =
                (static_cast<std::size_t>(oy) * ow + ox) * rows;
            for (int ci = 0; ci < channels; ++ci) {
                double* plane = dx.channel(ci);
                for (int ky = 0; ky < kernel; ++ky) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= in_h) continue;
                    double* row = plane + static_cast<std::size_t>(iy) * in_w;
                    const int r0 = (ci * kernel + ky) * kernel;
                    for (int kx = 0; kx < kernel; ++kx) {
                        const int ix = ox * stride - pad + kx;
                        if (ix < 0 || ix >= in_w) continue;
                        row[ix] += dcols[base + r0 + kx];
                    }
                }
            }
        }
    }
    return dx;
}

}  // namespace

Conv2d::Conv2d(std::string name, int in_ch, int out_ch, int kernel, int stride,
               int pad)
    : w(static_cast<std::size_t>(out_ch) * in_ch * kernel * kernel, 0.0),
      b(out_ch, 0.0),
      gw(w.size(), 0.0),
      gb(b.size(), 0.0),
      name_(std::move(name)),
      in_ch_(in_ch),
      out_ch_(out_ch),
      kernel_(kernel),
      stride_(stride),
      pad_(pad) {}

Tensor Conv2d::forward(const Tensor& x, Cache* cache) const {
    if (x.c != in_ch_) {
        throw ShapeError(name_ + ": expected " + std::to_string(in_ch_) +
                         " input channels, got " + std::to_string(x.c));
    }
    const int oh = out_height(x.h);
    const int ow = out_width(x.w);
    if (oh < 1 || ow < 1) {
        throw ShapeError(name_ + ": input " + x.shape_str() + " too small");
    }

    std::vector<double> local_cols;
    std::vector<double>& cols = cache ? cache->cols : local_cols;
    im2col(x, kernel_, stride_, pad_, oh, ow, cols);
    if (cache) {
        cache->in_h = x.h;
        cache->in_w = x.w;
        cache->oh = oh;
        cache->ow = ow;
    }

    const int krows = in_ch_ * kernel_ * kernel_;
    Tensor y(out_ch_, oh, ow);
    ConstRowMap wm(w.data(), out_ch_, krows);
    ConstMatMap cm(cols.data(), krows, static_cast<Eigen::Index>(oh) * ow);
    // Output is row-major per channel, which matches a column-major
    // (pixels x out_ch) product transposed.
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>
        ym(y.v.data(), out_ch_, static_cast<Eigen::Index>(oh) * ow);
    ym.noalias() = wm * cm;
    for (int oc = 0; oc < out_ch_; ++oc) {
        double* plane = y.channel(oc);
        const double bias = b[oc];
        for (std::size_t i = 0; i < y.plane(); ++i) plane[i] += bias;
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& dy, const Cache& cache) {
    const int krows = in_ch_ * kernel_ * kernel_;
    const Eigen::Index npix = static_cast<Eigen::Index>(cache.oh) * cache.ow;
    ConstRowMap dym(dy.v.data(), out_ch_, npix);
    ConstMatMap cm(cache.cols.data(), krows, npix);

    Eigen::Map<RowMat> gwm(gw.data(), out_ch_, krows);
    gwm.noalias() += dym * cm.transpose();
    for (int oc = 0; oc < out_ch_; ++oc) {
        gb[oc] += dym.row(oc).sum();
    }

    ConstRowMap wm(w.data(), out_ch_, krows);
    std::vector<double> dcols(static_cast<std::size_t>(krows) * npix);
    MatMap dcm(dcols.data(), krows, npix);
    dcm.noalias() = wm.transpose() * dym;
    return col2im(dcols, in_ch_, cache.in_h, cache.in_w, kernel_, stride_, pad_,
                  cache.oh, cache.ow);
}

void Conv2d::collect_params(std::vector<Param>& out) {
    out.push_back({name_ + ".w", &w, &gw});
    out.push_back({name_ + ".b", &b, &gb});
}

void Conv2d::zero_grad() {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
}

Linear::Linear(std::string name, int in_dim, int out_dim)
    : w(static_cast<std::size_t>(out_dim) * in_dim, 0.0),
      b(out_dim, 0.0),
      gw(w.size(), 0.0),
      gb(b.size(), 0.0),
      name_(std::move(name)),
      in_dim_(in_dim),
      out_dim_(out_dim) {}

std::vector<double> Linear::forward(const std::vector<double>& x,
                                    Cache* cache) const {
    if (static_cast<int>(x.size()) != in_dim_) {
        throw ShapeError(name_ + ": expected input dim " +
                         std::to_string(in_dim_) + ", got " +
                         std::to_string(x.size()));
    }
    if (cache) cache->x = x;
    std::vector<double> y(out_dim_);
    for (int o = 0; o < out_dim_; ++o) {
        const double* wr = w.data() + static_cast<std::size_t>(o) * in_dim_;
        double acc = b[o];
        for (int i = 0; i < in_dim_; ++i) acc += wr[i] * x[i];
        y[o] = acc;
    }
    return y;
}

std::vector<double> Linear::backward(const std::vector<double>& dy,
                                     const Cache& cache) {
    std::vector<double> dx(in_dim_, 0.0);
    for (int o = 0; o < out_dim_; ++o) {
        const double g = dy[o];
        gb[o] += g;
        double* gwr = gw.data() + static_cast<std::size_t>(o) * in_dim_;
        const double* wr = w.data() + static_cast<std::size_t>(o) * in_dim_;
        for (int i = 0; i < in_dim_; ++i) {
            gwr[i] += g * cache.x[i];
            dx[i] += g * wr[i];
        }
    }
    return dx;
}

void Linear::collect_params(std::vector<Param>& out) {
    out.push_back({name_ + ".w", &w, &gw});
    out.push_back({name_ + ".b", &b, &gb});
}

void Linear::zero_grad() {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
}

Tensor MaxPool2d::forward(const Tensor& x, Cache* cache) const {
    const int oh = (x.h + 2 * pad_ - kernel_) / stride_ + 1;
    const int ow = (x.w + 2 * pad_ - kernel_) / stride_ + 1;
    Tensor y(x.c, oh, ow);
    if (cache) {
        cache->argmax.assign(y.size(), -1);
        cache->in_h = x.h;
        cache->in_w = x.w;
    }
    for (int ci = 0; ci < x.c; ++ci) {
        const double* plane = x.channel(ci);
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double best = -std::numeric_limits<double>::infinity();
                int best_idx = -1;
                for (int ky = 0; ky < kernel_; ++ky) {
                    const int iy = oy * stride_ - pad_ + ky;
                    if (iy < 0 || iy >= x.h) continue;
                    for (int kx = 0; kx < kernel_; ++kx) {
                        const int ix = ox * stride_ - pad_ + kx;
                        if (ix < 0 || ix >= x.w) continue;
                        const double v = plane[static_cast<std::size_t>(iy) * x.w + ix];
                        if (v > best) {
                            best = v;
                            best_idx = iy * x.w + ix;
                        }
                    }
                }
                y.at(ci, oy, ox) = best;
                if (cache) {
                    cache->argmax[(static_cast<std::size_t>(ci) * oh + oy) * ow +
                                  ox] = best_idx;
                }
            }
        }
    }
    return y;
}

Tensor MaxPool2d::backward(const Tensor& dy, int channels,
                           const Cache& cache) const {
    Tensor dx(channels, cache.in_h, cache.in_w);
    for (int ci = 0; ci < channels; ++ci) {
        double* plane = dx.channel(ci);
        const std::size_t base = static_cast<std::size_t>(ci) * dy.plane();
        for (std::size_t i = 0; i < dy.plane(); ++i) {
            const int idx = cache.argmax[base + i];
            if (idx >= 0) plane[idx] += dy.v[base + i];
        }
    }
    return dx;
}

Tensor relu(const Tensor& x, std::vector<unsigned char>* mask) {
    Tensor y = x;
    if (mask) mask->assign(x.size(), 0);
    for (std::size_t i = 0; i < y.v.size(); ++i) {
        if (y.v[i] > 0.0) {
            if (mask) (*mask)[i] = 1;
        } else {
            y.v[i] = 0.0;
        }
    }
    return y;
}

Tensor relu_backward(const Tensor& dy, const std::vector<unsigned char>& mask) {
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.v.size(); ++i) {
        if (!mask[i]) dx.v[i] = 0.0;
    }
    return dx;
}

namespace {

struct Tap {
    int i0, i1;
    double f;  // weight of i1; (1-f) goes to i0
};

Tap tap_for(int out, int out_size, int in_size) {
    const double scale = static_cast<double>(in_size) / out_size;
    double src = (out + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in_size - 1));
    const int i0 = static_cast<int>(src);
    const int i1 = std::min(i0 + 1, in_size - 1);
    return {i0, i1, src - i0};
}

}  // namespace

Tensor resize_bilinear(const Tensor& x, int th, int tw) {
    if (x.h == th && x.w == tw) return x;
    Tensor y(x.c, th, tw);
    std::vector<Tap> ty(th), tx(tw);
    for (int i = 0; i < th; ++i) ty[i] = tap_for(i, th, x.h);
    for (int i = 0; i < tw; ++i) tx[i] = tap_for(i, tw, x.w);
    for (int ci = 0; ci < x.c; ++ci) {
        const double* plane = x.channel(ci);
        double* out = y.channel(ci);
        for (int oy = 0; oy < th; ++oy) {
            const Tap& a = ty[oy];
            const double* r0 = plane + static_cast<std::size_t>(a.i0) * x.w;
            const double* r1 = plane + static_cast<std::size_t>(a.i1) * x.w;
            for (int ox = 0; ox < tw; ++ox) {
                const Tap& c = tx[ox];
                out[static_cast<std::size_t>(oy) * tw + ox] =
                    (1.0 - a.f) * ((1.0 - c.f) * r0[c.i0] + c.f * r0[c.i1]) +
                    a.f * ((1.0 - c.f) * r1[c.i0] + c.f * r1[c.i1]);
            }
        }
    }
    return y;
}

Tensor resize_bilinear_backward(const Tensor& dy, int in_h, int in_w) {
    if (dy.h == in_h && dy.w == in_w) return dy;
    Tensor dx(dy.c, in_h, in_w);
    std::vector<Tap> ty(dy.h), tx(dy.w);
    for (int i = 0; i < dy.h; ++i) ty[i] = tap_for(i, dy.h, in_h);
    for (int i = 0; i < dy.w; ++i) tx[i] = tap_for(i, dy.w, in_w);
    for (int ci = 0; ci < dy.c; ++ci) {
        const double* g = dy.channel(ci);
        double* out = dx.channel(ci);
        for (int oy = 0; oy < dy.h; ++oy) {
            const Tap& a = ty[oy];
            for (int ox = 0; ox < dy.w; ++ox) {
                const Tap& c = tx[ox];
                const double v = g[static_cast<std::size_t>(oy) * dy.w + ox];
                out[static_cast<std::size_t>(a.i0) * in_w + c.i0] +=
                    (1.0 - a.f) * (1.0 - c.f) * v;
                out[static_cast<std::size_t>(a.i0) * in_w + c.i1] +=
                    (1.0 - a.f) * c.f * v;
                out[static_cast<std::size_t>(a.i1) * in_w + c.i0] +=
                    a.f * (1.0 - c.f) * v;
                out[static_cast<std::size_t>(a.i1) * in_w + c.i1] += a.f * c.f * v;
            }
        }
    }
    return dx;
}

std::vector<double> global_avg_pool(const Tensor& x) {
    std::vector<double> out(x.c, 0.0);
    const double inv = 1.0 / static_cast<double>(x.plane());
    for (int ci = 0; ci < x.c; ++ci) {
        const double* plane = x.channel(ci);
        double acc = 0.0;
        for (std::size_t i = 0; i < x.plane(); ++i) acc += plane[i];
        out[ci] = acc * inv;
    }
    return out;
}

Tensor global_avg_pool_backward(const std::vector<double>& dv, int h, int w) {
    Tensor dx(static_cast<int>(dv.size()), h, w);
    const double inv = 1.0 / (static_cast<double>(h) * w);
    for (std::size_t ci = 0; ci < dv.size(); ++ci) {
        double* plane = dx.channel(static_cast<int>(ci));
        const double g = dv[ci] * inv;
        for (std::size_t i = 0; i < dx.plane(); ++i) plane[i] = g;
    }
    return dx;
}

}  // namespace ccbir::nn
