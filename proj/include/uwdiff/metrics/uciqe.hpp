#ifndef UWDIFF_METRICS_UCIQE_HPP_
#define UWDIFF_METRICS_UCIQE_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "uwdiff/color/convert.hpp"
#include "uwdiff/core/image.hpp"

namespace uwdiff {

struct UciqeBreakdown {
    double sigma_chroma = 0.0;
    double luma_contrast = 0.0;
    double mean_saturation = 0.0;
    double uciqe = 0.0;
};

// Underwater colour image quality evaluation: chroma standard deviation,
// luminance contrast (spread between the top and bottom percentile means)
// and mean saturation in CIELAB, all on a unit scale (Lab / 100).
inline UciqeBreakdown uciqe_breakdown(const Image& img) {
    if (img.channels() != 3) throw std::invalid_argument("uciqe expects 3-channel images");
    const Image lab = srgb_to_lab(img);
    const auto n = static_cast<size_t>(lab.height() * lab.width());

    std::vector<double> lum(n), chroma(n), sat(n);
    for (size_t i = 0; i < n; ++i) {
        const double l = lab.plane(0)[static_cast<int64_t>(i)] / 100.0;
        const double a = lab.plane(1)[static_cast<int64_t>(i)] / 100.0;
        const double b = lab.plane(2)[static_cast<int64_t>(i)] / 100.0;
        const double c = std::hypot(a, b);
        lum[i] = l;
        chroma[i] = c;
        const double den = std::sqrt(c * c + l * l);
        sat[i] = den > 0.0 ? c / den : 0.0;
    }

    double mu_c = 0.0;
    for (double c : chroma) mu_c += c;
    mu_c /= static_cast<double>(n);
    double var_c = 0.0;
    for (double c : chroma) var_c += (c - mu_c) * (c - mu_c);
    var_c /= static_cast<double>(n);

    std::vector<double> sorted = lum;
    std::sort(sorted.begin(), sorted.end());
    const size_t k = std::max<size_t>(1, static_cast<size_t>(0.01 * static_cast<double>(n)));
    double lo = 0.0, hi = 0.0;
    for (size_t i = 0; i < k; ++i) {
        lo += sorted[i];
        hi += sorted[n - 1 - i];
    }
    lo /= static_cast<double>(k);
    hi /= static_cast<double>(k);

    double mu_s = 0.0;
    for (double s : sat) mu_s += s;
    mu_s /= static_cast<double>(n);

    UciqeBreakdown out;
    out.sigma_chroma = std::sqrt(var_c);
    out.luma_contrast = hi - lo;
    out.mean_saturation = mu_s;
    out.uciqe = 0.4680 * out.sigma_chroma + 0.2745 * out.luma_contrast + 0.2576 * out.mean_saturation;
    return out;
}

inline double uciqe(const Image& img) { return uciqe_breakdown(img).uciqe; }

}  // namespace uwdiff

#endif  // UWDIFF_METRICS_UCIQE_HPP_
