#pragma once

#include <string>
#include <vector>

namespace ccbir {

/// Multi-channel raster in planar CHW order. Values are either in [0,1] or
/// in byte range [0,255]; to_grayscale() auto-detects which.
struct RasterImage {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> pixels;  // channels * height * width, planar
    std::string source_id;

    double at(int c, int y, int x) const {
        return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double& at(int c, int y, int x) {
        return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
};

/// Single-channel raster with every pixel in [0,1]. The universal input of
/// both networks.
struct GrayscaleImage {
    int height = 0;
    int width = 0;
    std::vector<double> pixels;  // height * width, row-major
    std::string source_id;

    GrayscaleImage() = default;
    GrayscaleImage(int h, int w, double fill = 0.0, std::string id = {})
        : height(h), width(w),
          pixels(static_cast<std::size_t>(h) * w, fill),
          source_id(std::move(id)) {}

    double at(int y, int x) const {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
    double& at(int y, int x) {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
};

/// Crop window in pixel coordinates, used for over-scan removal.
struct CropRect {
    int left = 0;
    int top = 0;
    int width = 0;
    int height = 0;
};

/// Collapse a 1- or 3-channel raster to grayscale with ITU-R BT.601 luma
/// weights (0.299, 0.587, 0.114). Byte-range inputs (max value > 1.5) are
/// rescaled by 1/255 first. Any other channel count is rejected.
GrayscaleImage to_grayscale(const RasterImage& image);

/// Bilinear resize (half-pixel centers, edge clamp) to out_h x out_w, with
/// the output clamped to [0,1]. A same-size call is pixel-identical.
GrayscaleImage resize_normalize(const GrayscaleImage& img, int out_h = 256,
                                int out_w = 256);

/// Extract rect without resampling. Out-of-bounds rects raise DataError
/// naming the offending edge.
GrayscaleImage apply_overscan_crop(const GrayscaleImage& img, const CropRect& rect);

/// Sample the bilinear interpolant of img at fractional (y, x); coordinates
/// are clamped to the valid range. Shared by resize_normalize and the
/// feature-map resampling in the networks.
double bilinear_at(const std::vector<double>& pixels, int height, int width,
                   double y, double x);

// 8-bit binary PGM (P5). Values quantized with round(p * 255).
void write_pgm(const GrayscaleImage& img, const std::string& path);
GrayscaleImage read_pgm(const std::string& path);

}  // namespace ccbir
