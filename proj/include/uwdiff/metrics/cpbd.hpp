#ifndef UWDIFF_METRICS_CPBD_HPP_
#define UWDIFF_METRICS_CPBD_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "uwdiff/core/image.hpp"
#include "uwdiff/metrics/uiqm.hpp"

namespace uwdiff {

struct CpbdResult {
    double value = 0.0;
    // No pixel cleared the edge threshold, so sharpness is undefined and
    // reported as 0. Callers should surface this rather than trust the 0.
    bool no_edges = false;
};

// Cumulative probability of blur detection. Edges come from a horizontal
// Sobel response thresholded at twice its mean magnitude; each edge gets a
// Marziliano-style width (distance between the surrounding luma extrema
// along the row). Blur probability per edge is 1 - exp(-(w / w_jnb)^3.6)
// with the just-noticeable width picked by block contrast, and the score
// is the fraction of edges with blur probability at most 0.63, over 64x64
// blocks whose edge density exceeds 0.2%.
inline CpbdResult cpbd(const Image& img) {
    if (img.channels() != 3) throw std::invalid_argument("cpbd expects 3-channel images");
    const int64_t h = img.height();
    const int64_t w = img.width();
    const auto n = static_cast<size_t>(h * w);

    std::vector<double> luma(n);
    for (size_t i = 0; i < n; ++i) {
        luma[i] = 255.0 * (0.299 * img.plane(0)[static_cast<int64_t>(i)] +
                           0.587 * img.plane(1)[static_cast<int64_t>(i)] +
                           0.114 * img.plane(2)[static_cast<int64_t>(i)]);
    }

    auto at = [&](int64_t y, int64_t x) {
        return luma[static_cast<size_t>(detail::reflect_idx(y, h) * w + detail::reflect_idx(x, w))];
    };
    std::vector<double> gx(n);
    double mean_abs = 0.0;
    for (int64_t y = 0; y < h; ++y) {
        for (int64_t x = 0; x < w; ++x) {
            const double v = (at(y - 1, x + 1) - at(y - 1, x - 1)) +
                             2.0 * (at(y, x + 1) - at(y, x - 1)) +
                             (at(y + 1, x + 1) - at(y + 1, x - 1));
            gx[static_cast<size_t>(y * w + x)] = v;
            mean_abs += std::abs(v);
        }
    }
    mean_abs /= static_cast<double>(n);
    const double threshold = 2.0 * mean_abs;

    constexpr int64_t kBlock = 64;
    constexpr double kEdgeDensity = 0.002;
    constexpr double kBeta = 3.6;
    constexpr double kSharpProb = 0.63;
    const int64_t by_n = h / kBlock;
    const int64_t bx_n = w / kBlock;
    if (by_n == 0 || bx_n == 0) throw std::invalid_argument("cpbd needs images at least 64x64");

    int64_t edges_total = 0;
    int64_t edges_sharp = 0;
    for (int64_t by = 0; by < by_n; ++by) {
        for (int64_t bx = 0; bx < bx_n; ++bx) {
            std::vector<std::pair<int64_t, int64_t>> edges;
            double mn = luma[static_cast<size_t>(by * kBlock * w + bx * kBlock)];
            double mx = mn;
            for (int64_t y = by * kBlock; y < (by + 1) * kBlock; ++y) {
                for (int64_t x = bx * kBlock; x < (bx + 1) * kBlock; ++x) {
                    const double v = luma[static_cast<size_t>(y * w + x)];
                    mn = std::min(mn, v);
                    mx = std::max(mx, v);
                    if (std::abs(gx[static_cast<size_t>(y * w + x)]) > threshold)
                        edges.emplace_back(y, x);
                }
            }
            if (static_cast<double>(edges.size()) <=
                kEdgeDensity * static_cast<double>(kBlock * kBlock))
                continue;
            const double w_jnb = (mx - mn) <= 50.0 ? 5.0 : 3.0;
            for (const auto& [ey, ex] : edges) {
                const bool rising = gx[static_cast<size_t>(ey * w + ex)] > 0.0;
                int64_t l = ex;
                while (l - 1 >= 0) {
                    const double cur = luma[static_cast<size_t>(ey * w + l)];
                    const double nxt = luma[static_cast<size_t>(ey * w + l - 1)];
                    if (rising ? nxt < cur : nxt > cur)
                        --l;
                    else
                        break;
                }
                int64_t r = ex;
                while (r + 1 < w) {
                    const double cur = luma[static_cast<size_t>(ey * w + r)];
                    const double nxt = luma[static_cast<size_t>(ey * w + r + 1)];
                    if (rising ? nxt > cur : nxt < cur)
                        ++r;
                    else
                        break;
                }
                const double width = static_cast<double>(r - l);
                const double p_blur = 1.0 - std::exp(-std::pow(width / w_jnb, kBeta));
                ++edges_total;
                if (p_blur <= kSharpProb) ++edges_sharp;
            }
        }
    }

    CpbdResult out;
    if (edges_total == 0) {
        out.no_edges = true;
        return out;
    }
    out.value = static_cast<double>(edges_sharp) / static_cast<double>(edges_total);
    return out;
}

}  // namespace uwdiff

#endif  // UWDIFF_METRICS_CPBD_HPP_
