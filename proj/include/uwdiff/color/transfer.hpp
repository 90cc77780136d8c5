#ifndef UWDIFF_COLOR_TRANSFER_HPP_
#define UWDIFF_COLOR_TRANSFER_HPP_

#include <cmath>
#include <cstdint>

#include "uwdiff/color/convert.hpp"
#include "uwdiff/core/image.hpp"

namespace uwdiff {

struct ChannelStats {
    double mean[3];
    double stddev[3];  // population standard deviation
};

inline ChannelStats lab_channel_stats(const Image& lab) {
    ChannelStats s{};
    const int64_t n = lab.height() * lab.width();
    for (int64_t c = 0; c < 3; ++c) {
        const double* p = lab.plane(c);
        double mean = 0.0;
        for (int64_t i = 0; i < n; ++i) mean += p[i];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (int64_t i = 0; i < n; ++i) {
            const double d = p[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        s.mean[c] = mean;
        s.stddev[c] = std::sqrt(var);
    }
    return s;
}

struct TransferResult {
    Image image;             // sRGB in [0,1]
    int64_t clamped_pixels;  // count of sRGB values that fell outside [0,1]
};

// Per-channel statistics transfer in CIELAB: each Lab channel of `source`
// is shifted and rescaled so its mean and standard deviation match those
// of `target`. A constant source channel (stddev ~ 0) degrades to a pure
// mean shift via the variance floor. Conversion back to sRGB clamps to
// [0,1] and reports how many values needed it.
inline TransferResult transfer_color(const Image& source, const Image& target,
                                     double sigma_floor = 1e-6) {
    const Image src_lab = srgb_to_lab(source);
    const Image tgt_lab = srgb_to_lab(target);
    const ChannelStats s = lab_channel_stats(src_lab);
    const ChannelStats t = lab_channel_stats(tgt_lab);

    Image out_lab(3, source.height(), source.width());
    const int64_t n = source.height() * source.width();
    for (int64_t c = 0; c < 3; ++c) {
        const double denom = s.stddev[c] > sigma_floor ? s.stddev[c] : sigma_floor;
        const double scale = t.stddev[c] / denom;
        const double* sp = src_lab.plane(c);
        double* op = out_lab.plane(c);
        for (int64_t i = 0; i < n; ++i)
            op[i] = scale * (sp[i] - s.mean[c]) + t.mean[c];
    }

    TransferResult res{lab_to_srgb(out_lab), 0};
    for (double& v : res.image.vec()) {
        if (v < 0.0) {
            v = 0.0;
            ++res.clamped_pixels;
        } else if (v > 1.0) {
            v = 1.0;
            ++res.clamped_pixels;
        }
    }
    return res;
}

}  // namespace uwdiff

#endif  // UWDIFF_COLOR_TRANSFER_HPP_
