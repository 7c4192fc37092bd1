#include "ccbir/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ccbir/common.hpp"

namespace ccbir {

std::string to_hex(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

GrayscaleImage to_grayscale(const RasterImage& image) {
    if (image.channels != 1 && image.channels != 3) {
        throw DataError("to_grayscale: expected 1 or 3 channels, got " +
                        std::to_string(image.channels));
    }
    if (image.height < 1 || image.width < 1) {
        throw DataError("to_grayscale: degenerate image " +
                        std::to_string(image.height) + "x" +
                        std::to_string(image.width));
    }

    const double max_val =
        image.pixels.empty()
            ? 0.0
            : *std::max_element(image.pixels.begin(), image.pixels.end());
    const double scale = max_val > 1.5 ? 1.0 / 255.0 : 1.0;

    GrayscaleImage out(image.height, image.width, 0.0, image.source_id);
    const std::size_t plane =
        static_cast<std::size_t>(image.height) * image.width;
    if (image.channels == 1) {
        for (std::size_t i = 0; i < plane; ++i) {
            out.pixels[i] = std::clamp(image.pixels[i] * scale, 0.0, 1.0);
        }
    } else {
        const double* r = image.pixels.data();
        const double* g = r + plane;
        const double* b = g + plane;
        for (std::size_t i = 0; i < plane; ++i) {
            const double y = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
            out.pixels[i] = std::clamp(y * scale, 0.0, 1.0);
        }
    }
    return out;
}

double bilinear_at(const std::vector<double>& pixels, int height, int width,
                   double y, double x) {
    y = std::clamp(y, 0.0, static_cast<double>(height - 1));
    x = std::clamp(x, 0.0, static_cast<double>(width - 1));
    const int y0 = static_cast<int>(y);
    const int x0 = static_cast<int>(x);
    const int y1 = std::min(y0 + 1, height - 1);
    const int x1 = std::min(x0 + 1, width - 1);
    const double fy = y - y0;
    const double fx = x - x0;
    const double* row0 = pixels.data() + static_cast<std::size_t>(y0) * width;
    const double* row1 = pixels.data() + static_cast<std::size_t>(y1) * width;
    return (1.0 - fy) * ((1.0 - fx) * row0[x0] + fx * row0[x1]) +
           fy * ((1.0 - fx) * row1[x0] + fx * row1[x1]);
}

GrayscaleImage resize_normalize(const GrayscaleImage& img, int out_h, int out_w) {
    if (img.height < 1 || img.width < 1) {
        throw DataError("resize_normalize: degenerate input " +
                        std::to_string(img.height) + "x" +
                        std::to_string(img.width));
    }
    if (out_h < 1 || out_w < 1) {
        throw ConfigError("resize_normalize: invalid target size");
    }
    GrayscaleImage out(out_h, out_w, 0.0, img.source_id);
    const double sy = static_cast<double>(img.height) / out_h;
    const double sx = static_cast<double>(img.width) / out_w;
    for (int y = 0; y < out_h; ++y) {
        const double src_y = (y + 0.5) * sy - 0.5;
        for (int x = 0; x < out_w; ++x) {
            const double src_x = (x + 0.5) * sx - 0.5;
            const double v =
                bilinear_at(img.pixels, img.height, img.width, src_y, src_x);
            out.at(y, x) = std::clamp(v, 0.0, 1.0);
        }
    }
    return out;
}

GrayscaleImage apply_overscan_crop(const GrayscaleImage& img, const CropRect& rect) {
    if (rect.width < 1 || rect.height < 1) {
        throw DataError("apply_overscan_crop: empty rect");
    }
    if (rect.left < 0) {
        throw DataError("apply_overscan_crop: rect exceeds left edge (left=" +
                        std::to_string(rect.left) + ")");
    }
    if (rect.top < 0) {
        throw DataError("apply_overscan_crop: rect exceeds top edge (top=" +
                        std::to_string(rect.top) + ")");
    }
    if (rect.left + rect.width > img.width) {
        throw DataError(
            "apply_overscan_crop: rect exceeds right edge (left=" +
            std::to_string(rect.left) + " width=" + std::to_string(rect.width) +
            " image width=" + std::to_string(img.width) + ")");
    }
    if (rect.top + rect.height > img.height) {
        throw DataError(
            "apply_overscan_crop: rect exceeds bottom edge (top=" +
            std::to_string(rect.top) + " height=" + std::to_string(rect.height) +
            " image height=" + std::to_string(img.height) + ")");
    }
    GrayscaleImage out(rect.height, rect.width, 0.0, img.source_id);
    for (int y = 0; y < rect.height; ++y) {
        const double* src = img.pixels.data() +
                            static_cast<std::size_t>(rect.top + y) * img.width +
                            rect.left;
        std::copy(src, src + rect.width,
                  out.pixels.begin() + static_cast<std::size_t>(y) * rect.width);
    }
    return out;
}

void write_pgm(const GrayscaleImage& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("write_pgm: cannot open " + path);
    f << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> row(img.width);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double v = std::clamp(img.at(y, x), 0.0, 1.0);
            row[x] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
        f.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
    if (!f) throw DataError("write_pgm: write failed for " + path);
}

GrayscaleImage read_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("read_pgm: cannot open " + path);
    std::string magic;
    f >> magic;
    if (magic != "P5") throw DataError("read_pgm: not a binary PGM: " + path);
    auto next_int = [&f, &path]() {
        // Skip whitespace and '#' comment lines between header fields.
        int c = f.peek();
        while (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '#') {
            if (c == '#') {
                std::string line;
                std::getline(f, line);
            } else {
                f.get();
            }
            c = f.peek();
        }
        int value = 0;
        if (!(f >> value)) throw DataError("read_pgm: bad header in " + path);
        return value;
    };
    const int w = next_int();
    const int h = next_int();
    const int maxval = next_int();
    if (w < 1 || h < 1 || maxval < 1 || maxval > 255) {
        throw DataError("read_pgm: unsupported header in " + path);
    }
    f.get();  // single whitespace byte before raster
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h);
    f.read(reinterpret_cast<char*>(raw.data()), raw.size());
    if (!f) throw DataError("read_pgm: truncated raster in " + path);
    GrayscaleImage out(h, w, 0.0, path);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out.pixels[i] = static_cast<double>(raw[i]) / maxval;
    }
    return out;
}

}  // namespace ccbir
