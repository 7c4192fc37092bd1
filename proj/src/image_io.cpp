#include "ccbir/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "ccbir/common.hpp"

namespace ccbir {

RasterImage load_image(const std::string& path) {
    cv::Mat mat = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (mat.empty()) {
        throw DataError("load_image: cannot read " + path);
    }
    if (mat.channels() == 4) {
        cv::Mat bgr;
        cv::cvtColor(mat, bgr, cv::COLOR_BGRA2BGR);
        mat = bgr;
    }
    if (mat.channels() != 1 && mat.channels() != 3) {
        throw DataError("load_image: unsupported channel count " +
                        std::to_string(mat.channels()) + " in " + path);
    }
    cv::Mat m8;
    if (mat.depth() == CV_8U) {
        m8 = mat;
    } else {
        // 16-bit PNGs and friends: scale down to byte range.
        double maxv = 0.0;
        cv::minMaxLoc(mat.reshape(1), nullptr, &maxv);
        mat.convertTo(m8, CV_8U, maxv > 0 ? 255.0 / maxv : 1.0);
    }

    RasterImage out;
    out.channels = m8.channels();
    out.height = m8.rows;
    out.width = m8.cols;
    out.source_id = path;
    out.pixels.resize(static_cast<std::size_t>(out.channels) * out.height *
                      out.width);
    const std::size_t plane = static_cast<std::size_t>(out.height) * out.width;
    for (int y = 0; y < out.height; ++y) {
        const unsigned char* row = m8.ptr<unsigned char>(y);
        for (int x = 0; x < out.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * out.width + x;
            if (out.channels == 1) {
                out.pixels[i] = row[x];
            } else {
                // OpenCV stores BGR; the raster is planar RGB.
                out.pixels[i] = row[3 * x + 2];
                out.pixels[plane + i] = row[3 * x + 1];
                out.pixels[2 * plane + i] = row[3 * x];
            }
        }
    }
    return out;
}

GrayscaleImage load_grayscale(const std::string& path) {
    return to_grayscale(load_image(path));
}

void save_png(const GrayscaleImage& img, const std::string& path) {
    cv::Mat mat(img.height, img.width, CV_8U);
    for (int y = 0; y < img.height; ++y) {
        unsigned char* row = mat.ptr<unsigned char>(y);
        for (int x = 0; x < img.width; ++x) {
            const double v = std::min(std::max(img.at(y, x), 0.0), 1.0);
            row[x] = static_cast<unsigned char>(v * 255.0 + 0.5);
        }
    }
    if (!cv::imwrite(path, mat)) {
        throw DataError("save_png: cannot write " + path);
    }
}

}  // namespace ccbir
