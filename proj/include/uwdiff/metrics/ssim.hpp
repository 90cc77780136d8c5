#ifndef UWDIFF_METRICS_SSIM_HPP_
#define UWDIFF_METRICS_SSIM_HPP_

#include <cmath>
#include <stdexcept>
#include <vector>

#include "uwdiff/core/image.hpp"

namespace uwdiff {
namespace detail {

inline std::vector<double> ssim_luma(const Image& img) {
    if (img.channels() != 3) throw std::invalid_argument("ssim expects 3-channel images");
    std::vector<double> y(static_cast<size_t>(img.height() * img.width()));
    for (int64_t p = 0; p < img.height() * img.width(); ++p) {
        y[static_cast<size_t>(p)] = 0.299 * img.plane(0)[p] + 0.587 * img.plane(1)[p] +
                                    0.114 * img.plane(2)[p];
    }
    return y;
}

// Gaussian-weighted local mean, valid region only (no padding).
inline std::vector<double> gaussian_valid(const std::vector<double>& src, int64_t h, int64_t w,
                                          const std::vector<double>& k) {
    const int64_t r = static_cast<int64_t>(k.size()) / 2;
    const int64_t oh = h - 2 * r;
    const int64_t ow = w - 2 * r;
    std::vector<double> tmp(static_cast<size_t>(h * ow));
    for (int64_t y = 0; y < h; ++y) {
        for (int64_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (size_t i = 0; i < k.size(); ++i)
                acc += k[i] * src[static_cast<size_t>(y * w + x + static_cast<int64_t>(i))];
            tmp[static_cast<size_t>(y * ow + x)] = acc;
        }
    }
    std::vector<double> out(static_cast<size_t>(oh * ow));
    for (int64_t y = 0; y < oh; ++y) {
        for (int64_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (size_t i = 0; i < k.size(); ++i)
                acc += k[i] * tmp[static_cast<size_t>((y + static_cast<int64_t>(i)) * ow + x)];
            out[static_cast<size_t>(y * ow + x)] = acc;
        }
    }
    return out;
}

}  // namespace detail

// Structural similarity on the luma plane. 11x11 Gaussian window with
// sigma 1.5, stability constants C1 = 0.01^2 and C2 = 0.03^2 for a unit
// dynamic range, averaged over the valid (unpadded) window positions.
inline double ssim(const Image& a, const Image& b) {
    if (a.channels() != b.channels() || a.height() != b.height() || a.width() != b.width())
        throw std::invalid_argument("ssim needs same-size images");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    constexpr double kC1 = 0.01 * 0.01;
    constexpr double kC2 = 0.03 * 0.03;
    if (a.height() < kWin || a.width() < kWin)
        throw std::invalid_argument("ssim needs images at least 11x11");

    std::vector<double> kernel(kWin);
    double ksum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double d = static_cast<double>(i - kWin / 2);
        kernel[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        ksum += kernel[static_cast<size_t>(i)];
    }
    for (double& v : kernel) v /= ksum;

    const int64_t h = a.height();
    const int64_t w = a.width();
    const std::vector<double> x = detail::ssim_luma(a);
    const std::vector<double> y = detail::ssim_luma(b);
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }

    const std::vector<double> mx = detail::gaussian_valid(x, h, w, kernel);
    const std::vector<double> my = detail::gaussian_valid(y, h, w, kernel);
    const std::vector<double> mxx = detail::gaussian_valid(xx, h, w, kernel);
    const std::vector<double> myy = detail::gaussian_valid(yy, h, w, kernel);
    const std::vector<double> mxy = detail::gaussian_valid(xy, h, w, kernel);

    double total = 0.0;
    for (size_t i = 0; i < mx.size(); ++i) {
        const double vx = mxx[i] - mx[i] * mx[i];
        const double vy = myy[i] - my[i] * my[i];
        const double cxy = mxy[i] - mx[i] * my[i];
        const double num = (2.0 * mx[i] * my[i] + kC1) * (2.0 * cxy + kC2);
        const double den = (mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2);
        total += num / den;
    }
    return total / static_cast<double>(mx.size());
}

}  // namespace uwdiff

#endif  // UWDIFF_METRICS_SSIM_HPP_
