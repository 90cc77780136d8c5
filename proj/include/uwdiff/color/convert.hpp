#ifndef UWDIFF_COLOR_CONVERT_HPP_
#define UWDIFF_COLOR_CONVERT_HPP_

#include <cmath>

#include "uwdiff/core/image.hpp"

namespace uwdiff {

// sRGB <-> CIELAB under the D65 reference white. Inputs are linear in
// neither direction: srgb values are gamma-encoded in [0,1], Lab has
// L in [0,100]. Out-of-gamut Lab maps back to unclamped sRGB; callers
// clamp where their contract says so.

namespace detail {

inline double srgb_to_linear(double u) {
    return u <= 0.04045 ? u / 12.92 : std::pow((u + 0.055) / 1.055, 2.4);
}

inline double linear_to_srgb(double u) {
    return u <= 0.0031308 ? 12.92 * u : 1.055 * std::pow(u, 1.0 / 2.4) - 0.055;
}

constexpr double kXn = 0.95047;
constexpr double kYn = 1.0;
constexpr double kZn = 1.08883;

// f(t) from the CIELAB definition; threshold (6/29)^3.
inline double lab_f(double t) {
    constexpr double kEps = 216.0 / 24389.0;   // (6/29)^3
    constexpr double kKappa = 24389.0 / 27.0;  // (29/3)^3
    return t > kEps ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0;
}

inline double lab_f_inv(double ft) {
    constexpr double kDelta = 6.0 / 29.0;
    return ft > kDelta ? ft * ft * ft : 3.0 * kDelta * kDelta * (ft - 4.0 / 29.0);
}

}  // namespace detail

inline void srgb_pixel_to_lab(double r, double g, double b,
                              double& L, double& a, double& bb) {
    const double rl = detail::srgb_to_linear(r);
    const double gl = detail::srgb_to_linear(g);
    const double bl = detail::srgb_to_linear(b);

    const double X = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
    const double Y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
    const double Z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;

    const double fx = detail::lab_f(X / detail::kXn);
    const double fy = detail::lab_f(Y / detail::kYn);
    const double fz = detail::lab_f(Z / detail::kZn);

    L = 116.0 * fy - 16.0;
    a = 500.0 * (fx - fy);
    bb = 200.0 * (fy - fz);
}

inline void lab_pixel_to_srgb(double L, double a, double b,
                              double& r, double& g, double& bb) {
    const double fy = (L + 16.0) / 116.0;
    const double fx = fy + a / 500.0;
    const double fz = fy - b / 200.0;

    const double X = detail::kXn * detail::lab_f_inv(fx);
    const double Y = detail::kYn * detail::lab_f_inv(fy);
    const double Z = detail::kZn * detail::lab_f_inv(fz);

    // Exact inverse of the forward matrix (not the usual 7-digit rounding),
    // so lab_to_srgb(srgb_to_lab(x)) == x to machine precision.
    const double rl =  3.2404548360214087 * X - 1.5371388501025751 * Y - 0.498531546868481 * Z;
    const double gl = -0.96926638987565383 * X + 1.8760109288424911 * Y + 0.041556082346673545 * Z;
    const double bl =  0.055643419604213672 * X - 0.20402585426769818 * Y + 1.057225162457929 * Z;

    r = detail::linear_to_srgb(rl);
    g = detail::linear_to_srgb(gl);
    bb = detail::linear_to_srgb(bl);
}

inline Image srgb_to_lab(const Image& rgb) {
    Image lab(3, rgb.height(), rgb.width());
    for (int64_t y = 0; y < rgb.height(); ++y)
        for (int64_t x = 0; x < rgb.width(); ++x) {
            double L, a, b;
            srgb_pixel_to_lab(rgb.at(0, y, x), rgb.at(1, y, x), rgb.at(2, y, x), L, a, b);
            lab.at(0, y, x) = L;
            lab.at(1, y, x) = a;
            lab.at(2, y, x) = b;
        }
    return lab;
}

// Unclamped: out-of-gamut Lab yields sRGB outside [0,1].
inline Image lab_to_srgb(const Image& lab) {
    Image rgb(3, lab.height(), lab.width());
    for (int64_t y = 0; y < lab.height(); ++y)
        for (int64_t x = 0; x < lab.width(); ++x) {
            double r, g, b;
            lab_pixel_to_srgb(lab.at(0, y, x), lab.at(1, y, x), lab.at(2, y, x), r, g, b);
            rgb.at(0, y, x) = r;
            rgb.at(1, y, x) = g;
            rgb.at(2, y, x) = b;
        }
    return rgb;
}

}  // namespace uwdiff

#endif  // UWDIFF_COLOR_CONVERT_HPP_
