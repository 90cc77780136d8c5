#ifndef UWDIFF_METRICS_PSNR_HPP_
#define UWDIFF_METRICS_PSNR_HPP_

#include <cmath>
#include <stdexcept>

#include "uwdiff/core/image.hpp"

namespace uwdiff {

// Peak signal-to-noise ratio over all channels, peak = 1.0. Identical
// images would give +inf; capped at 100 dB so aggregation stays finite.
inline double psnr(const Image& a, const Image& b) {
    if (a.channels() != b.channels() || a.height() != b.height() || a.width() != b.width())
        throw std::invalid_argument("psnr needs same-size images");
    double mse = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) {
        const double d = a.vec()[static_cast<size_t>(i)] - b.vec()[static_cast<size_t>(i)];
        mse += d * d;
    }
    mse /= static_cast<double>(a.numel());
    if (mse <= 0.0) return 100.0;
    const double v = 10.0 * std::log10(1.0 / mse);
    return v > 100.0 ? 100.0 : v;
}

}  // namespace uwdiff

#endif  // UWDIFF_METRICS_PSNR_HPP_
