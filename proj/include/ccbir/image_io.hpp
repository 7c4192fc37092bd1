#pragma once

#include <string>

#include "ccbir/image.hpp"

namespace ccbir {

/// Decode a PNG/JPEG/PGM file into a raster (values in byte range, RGB
/// channel order for color sources). Alpha channels are dropped.
RasterImage load_image(const std::string& path);

/// load_image + to_grayscale. source_id is the given path.
GrayscaleImage load_grayscale(const std::string& path);

/// Encode a grayscale image as 8-bit PNG.
void save_png(const GrayscaleImage& img, const std::string& path);

}  // namespace ccbir
