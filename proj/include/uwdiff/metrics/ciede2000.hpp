#ifndef UWDIFF_METRICS_CIEDE2000_HPP_
#define UWDIFF_METRICS_CIEDE2000_HPP_

#include <cmath>

#include "uwdiff/color/convert.hpp"
#include "uwdiff/core/image.hpp"

namespace uwdiff {

// CIEDE2000 color difference, including the hue rotation term and the
// published corrections for hue-angle wrap-around. kL = kC = kH = 1.
inline double ciede2000(double L1, double a1, double b1,
                        double L2, double a2, double b2) {
    const double C1 = std::hypot(a1, b1);
    const double C2 = std::hypot(a2, b2);
    const double Cbar = 0.5 * (C1 + C2);

    const double Cbar7 = std::pow(Cbar, 7.0);
    const double G = 0.5 * (1.0 - std::sqrt(Cbar7 / (Cbar7 + 6103515625.0)));  // 25^7

    const double a1p = (1.0 + G) * a1;
    const double a2p = (1.0 + G) * a2;
    const double C1p = std::hypot(a1p, b1);
    const double C2p = std::hypot(a2p, b2);

    auto hue_of = [](double ap, double bp) {
        if (ap == 0.0 && bp == 0.0) return 0.0;
        double h = std::atan2(bp, ap) * 180.0 / M_PI;
        if (h < 0.0) h += 360.0;
        return h;
    };
    const double h1p = hue_of(a1p, b1);
    const double h2p = hue_of(a2p, b2);

    const double dLp = L2 - L1;
    const double dCp = C2p - C1p;

    double dhp = 0.0;
    if (C1p * C2p != 0.0) {
        dhp = h2p - h1p;
        if (dhp > 180.0) dhp -= 360.0;
        else if (dhp < -180.0) dhp += 360.0;
    }
    const double dHp = 2.0 * std::sqrt(C1p * C2p) * std::sin(dhp * M_PI / 360.0);

    const double Lbp = 0.5 * (L1 + L2);
    const double Cbp = 0.5 * (C1p + C2p);

    double hbp;
    if (C1p * C2p == 0.0) {
        hbp = h1p + h2p;
    } else {
        const double diff = std::fabs(h1p - h2p);
        const double sum = h1p + h2p;
        if (diff <= 180.0) hbp = 0.5 * sum;
        else if (sum < 360.0) hbp = 0.5 * (sum + 360.0);
        else hbp = 0.5 * (sum - 360.0);
    }

    const double T = 1.0
        - 0.17 * std::cos((hbp - 30.0) * M_PI / 180.0)
        + 0.24 * std::cos(2.0 * hbp * M_PI / 180.0)
        + 0.32 * std::cos((3.0 * hbp + 6.0) * M_PI / 180.0)
        - 0.20 * std::cos((4.0 * hbp - 63.0) * M_PI / 180.0);

    const double dTheta = 30.0 * std::exp(-((hbp - 275.0) / 25.0) * ((hbp - 275.0) / 25.0));
    const double Cbp7 = std::pow(Cbp, 7.0);
    const double RC = 2.0 * std::sqrt(Cbp7 / (Cbp7 + 6103515625.0));
    const double RT = -RC * std::sin(2.0 * dTheta * M_PI / 180.0);

    const double Lm50 = (Lbp - 50.0) * (Lbp - 50.0);
    const double SL = 1.0 + 0.015 * Lm50 / std::sqrt(20.0 + Lm50);
    const double SC = 1.0 + 0.045 * Cbp;
    const double SH = 1.0 + 0.015 * Cbp * T;

    const double tL = dLp / SL;
    const double tC = dCp / SC;
    const double tH = dHp / SH;
    return std::sqrt(tL * tL + tC * tC + tH * tH + RT * tC * tH);
}

// Mean per-pixel CIEDE2000 between two same-size sRGB images.
inline double mean_ciede2000(const Image& a, const Image& b) {
    const Image la = srgb_to_lab(a);
    const Image lb = srgb_to_lab(b);
    double sum = 0.0;
    const int64_t h = a.height(), w = a.width();
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x)
            sum += ciede2000(la.at(0, y, x), la.at(1, y, x), la.at(2, y, x),
                             lb.at(0, y, x), lb.at(1, y, x), lb.at(2, y, x));
    return sum / static_cast<double>(h * w);
}

}  // namespace uwdiff

#endif  // UWDIFF_METRICS_CIEDE2000_HPP_
