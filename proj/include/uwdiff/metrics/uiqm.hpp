#ifndef UWDIFF_METRICS_UIQM_HPP_
#define UWDIFF_METRICS_UIQM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "uwdiff/core/image.hpp"

namespace uwdiff {
namespace detail {

// Asymmetric alpha-trimmed mean: drop ceil(alpha*K) smallest and
// floor(alpha*K) largest samples, average the rest.
inline double trimmed_mean(std::vector<double> v, double alpha) {
    const auto k = static_cast<int64_t>(v.size());
    const auto tl = static_cast<int64_t>(std::ceil(alpha * static_cast<double>(k)));
    const auto tr = static_cast<int64_t>(std::floor(alpha * static_cast<double>(k)));
    if (tl + tr >= k) throw std::invalid_argument("trimmed_mean: trim exceeds sample count");
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (int64_t i = tl; i < k - tr; ++i) s += v[static_cast<size_t>(i)];
    return s / static_cast<double>(k - tl - tr);
}

inline double second_moment_about(const std::vector<double>& v, double mu) {
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return s / static_cast<double>(v.size());
}

inline int64_t reflect_idx(int64_t i, int64_t n) {
    if (i < 0) return -i - 1;
    if (i >= n) return 2 * n - 1 - i;
    return i;
}

// Sobel gradient magnitude, [-1 0 1] derivative with [1 2 1] smoothing,
// edge pixels replicated (symmetric padding).
inline std::vector<double> sobel_magnitude(const std::vector<double>& p, int64_t h, int64_t w) {
    std::vector<double> gx(p.size()), gy(p.size()), tmp(p.size());
    auto at = [&](const std::vector<double>& a, int64_t y, int64_t x) {
        return a[static_cast<size_t>(reflect_idx(y, h) * w + reflect_idx(x, w))];
    };
    // d/dx then smooth along y
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x)
            tmp[static_cast<size_t>(y * w + x)] = at(p, y, x + 1) - at(p, y, x - 1);
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x)
            gx[static_cast<size_t>(y * w + x)] =
                at(tmp, y - 1, x) + 2.0 * at(tmp, y, x) + at(tmp, y + 1, x);
    // d/dy then smooth along x
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x)
            tmp[static_cast<size_t>(y * w + x)] = at(p, y + 1, x) - at(p, y - 1, x);
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x)
            gy[static_cast<size_t>(y * w + x)] =
                at(tmp, y, x - 1) + 2.0 * at(tmp, y, x) + at(tmp, y, x + 1);
    std::vector<double> mag(p.size());
    for (size_t i = 0; i < p.size(); ++i) mag[i] = std::hypot(gx[i], gy[i]);
    return mag;
}

// Michelson-style log enhancement measure over non-overlapping blocks;
// partial border blocks are dropped, blocks touching zero are skipped.
inline double eme(const std::vector<double>& p, int64_t h, int64_t w, int64_t win) {
    const int64_t k2 = h / win;
    const int64_t k1 = w / win;
    if (k1 == 0 || k2 == 0) throw std::invalid_argument("eme: image smaller than block");
    double acc = 0.0;
    for (int64_t by = 0; by < k2; ++by) {
        for (int64_t bx = 0; bx < k1; ++bx) {
            double mn = p[static_cast<size_t>(by * win * w + bx * win)];
            double mx = mn;
            for (int64_t y = by * win; y < (by + 1) * win; ++y) {
                for (int64_t x = bx * win; x < (bx + 1) * win; ++x) {
                    const double v = p[static_cast<size_t>(y * w + x)];
                    mn = std::min(mn, v);
                    mx = std::max(mx, v);
                }
            }
            if (mn > 0.0 && mx > 0.0) acc += std::log(mx / mn);
        }
    }
    return 2.0 / static_cast<double>(k1 * k2) * acc;
}

}  // namespace detail

struct UiqmBreakdown {
    double uicm = 0.0;
    double uism = 0.0;
    double uiconm = 0.0;
    double uiqm = 0.0;
};

// Underwater image quality measure: weighted sum of a colorfulness term
// (trimmed-mean chroma statistics of the RG / YB opponent planes), a
// sharpness term (EME of Sobel-weighted channels) and a block contrast
// term. Input is sRGB in [0,1]; internally scaled to [0,255].
inline UiqmBreakdown uiqm_breakdown(const Image& img) {
    if (img.channels() != 3) throw std::invalid_argument("uiqm expects 3-channel images");
    const int64_t h = img.height();
    const int64_t w = img.width();
    const auto n = static_cast<size_t>(h * w);
    std::vector<double> r(n), g(n), b(n);
    for (size_t i = 0; i < n; ++i) {
        r[i] = img.plane(0)[static_cast<int64_t>(i)] * 255.0;
        g[i] = img.plane(1)[static_cast<int64_t>(i)] * 255.0;
        b[i] = img.plane(2)[static_cast<int64_t>(i)] * 255.0;
    }

    std::vector<double> rg(n), yb(n);
    for (size_t i = 0; i < n; ++i) {
        rg[i] = r[i] - g[i];
        yb[i] = 0.5 * (r[i] + g[i]) - b[i];
    }
    const double mu_rg = detail::trimmed_mean(rg, 0.1);
    const double mu_yb = detail::trimmed_mean(yb, 0.1);
    const double var_rg = detail::second_moment_about(rg, mu_rg);
    const double var_yb = detail::second_moment_about(yb, mu_yb);

    UiqmBreakdown out;
    out.uicm = -0.0268 * std::hypot(mu_rg, mu_yb) + 0.1586 * std::sqrt(var_rg + var_yb);

    constexpr int64_t kEmeWindow = 10;
    const std::vector<double>* planes[3] = {&r, &g, &b};
    const double luma_w[3] = {0.299, 0.587, 0.114};
    double uism = 0.0;
    for (int c = 0; c < 3; ++c) {
        std::vector<double> mag = detail::sobel_magnitude(*planes[c], h, w);
        for (size_t i = 0; i < n; ++i) mag[i] *= (*planes[c])[i];
        uism += luma_w[c] * detail::eme(mag, h, w, kEmeWindow);
    }
    out.uism = uism;

    // Block contrast over all three channels jointly; each block
    // contributes -(t/s) log(t/s) with t = max-min and s = max+min.
    const int64_t k2 = h / kEmeWindow;
    const int64_t k1 = w / kEmeWindow;
    double acc = 0.0;
    for (int64_t by = 0; by < k2; ++by) {
        for (int64_t bx = 0; bx < k1; ++bx) {
            double mn = r[static_cast<size_t>(by * kEmeWindow * w + bx * kEmeWindow)];
            double mx = mn;
            for (int c = 0; c < 3; ++c) {
                for (int64_t y = by * kEmeWindow; y < (by + 1) * kEmeWindow; ++y) {
                    for (int64_t x = bx * kEmeWindow; x < (bx + 1) * kEmeWindow; ++x) {
                        const double v = (*planes[c])[static_cast<size_t>(y * w + x)];
                        mn = std::min(mn, v);
                        mx = std::max(mx, v);
                    }
                }
            }
            const double top = mx - mn;
            const double bot = mx + mn;
            if (top > 0.0 && bot > 0.0) acc += top / bot * std::log(top / bot);
        }
    }
    out.uiconm = -acc / static_cast<double>(k1 * k2);

    out.uiqm = 0.0282 * out.uicm + 0.2953 * out.uism + 3.5753 * out.uiconm;
    return out;
}

inline double uiqm(const Image& img) { return uiqm_breakdown(img).uiqm; }

}  // namespace uwdiff

#endif  // UWDIFF_METRICS_UIQM_HPP_
