#ifndef UWDIFF_IO_IMAGE_IO_HPP_
#define UWDIFF_IO_IMAGE_IO_HPP_

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <opencv2/imgcodecs.hpp>

#include "uwdiff/core/image.hpp"

namespace uwdiff {

// Reads an 8-bit image file into planar RGB doubles in [0,1].
inline Image load_image(const std::string& path) {
    cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
    if (bgr.empty()) throw std::runtime_error("cannot read image: " + path);
    if (bgr.depth() != CV_8U) throw std::runtime_error("expected 8-bit image: " + path);
    Image img(3, bgr.rows, bgr.cols);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            img.at(0, y, x) = row[x][2] / 255.0;
            img.at(1, y, x) = row[x][1] / 255.0;
            img.at(2, y, x) = row[x][0] / 255.0;
        }
    }
    return img;
}

// Writes as 8-bit with round-half-away quantization after clamping.
// Format follows the extension (.png recommended; lossless).
inline void save_image(const std::string& path, const Image& img) {
    if (img.channels() != 3) throw std::invalid_argument("save_image expects 3 channels");
    cv::Mat bgr(static_cast<int>(img.height()), static_cast<int>(img.width()), CV_8UC3);
    for (int64_t y = 0; y < img.height(); ++y) {
        auto* row = bgr.ptr<cv::Vec3b>(static_cast<int>(y));
        for (int64_t x = 0; x < img.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
                double v = img.at(c, y, x);
                v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
                row[x][2 - c] = static_cast<unsigned char>(std::llround(v * 255.0));
            }
        }
    }
    if (!cv::imwrite(path, bgr)) throw std::runtime_error("cannot write image: " + path);
}

}  // namespace uwdiff

#endif  // UWDIFF_IO_IMAGE_IO_HPP_
