#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ccbir/image.hpp"

namespace ccbir::nn {

/// Dense C x H x W activation block, channel-major row-major.
struct Tensor {
    int c = 0;
    int h = 0;
    int w = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int c_, int h_, int w_, double fill = 0.0)
        : c(c_), h(h_), w(w_),
          v(static_cast<std::size_t>(c_) * h_ * w_, fill) {}

    std::size_t size() const { return v.size(); }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }

    double at(int ci, int yi, int xi) const {
        return v[(static_cast<std::size_t>(ci) * h + yi) * w + xi];
    }
    double& at(int ci, int yi, int xi) {
        return v[(static_cast<std::size_t>(ci) * h + yi) * w + xi];
    }

    const double* channel(int ci) const { return v.data() + ci * plane(); }
    double* channel(int ci) { return v.data() + ci * plane(); }

    void zero() { std::fill(v.begin(), v.end(), 0.0); }

    bool same_shape(const Tensor& o) const {
        return c == o.c && h == o.h && w == o.w;
    }
    std::string shape_str() const {
        return std::to_string(c) + "x" + std::to_string(h) + "x" +
               std::to_string(w);
    }
};

inline Tensor tensor_from_image(const GrayscaleImage& img) {
    Tensor t(1, img.height, img.width);
    t.v = img.pixels;
    return t;
}

}  // namespace ccbir::nn
