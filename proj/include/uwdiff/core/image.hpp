#ifndef UWDIFF_CORE_IMAGE_HPP_
#define UWDIFF_CORE_IMAGE_HPP_

#include <cassert>
#include <cstdint>
#include <vector>

#include "uwdiff/core/tensor.hpp"

namespace uwdiff {

// Planar C×H×W image of doubles. sRGB images hold values in [0,1];
// Lab images hold L in [0,100] and a,b roughly in [-128,127].
class Image {
  public:
    Image() : c_(0), h_(0), w_(0) {}
    Image(int64_t c, int64_t h, int64_t w) : c_(c), h_(h), w_(w) {
        data_.assign(static_cast<size_t>(c * h * w), 0.0);
    }

    int64_t channels() const { return c_; }
    int64_t height() const { return h_; }
    int64_t width() const { return w_; }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }

    double& at(int64_t c, int64_t y, int64_t x) {
        return data_[static_cast<size_t>((c * h_ + y) * w_ + x)];
    }
    double at(int64_t c, int64_t y, int64_t x) const {
        return data_[static_cast<size_t>((c * h_ + y) * w_ + x)];
    }

    double* plane(int64_t c) { return data_.data() + c * h_ * w_; }
    const double* plane(int64_t c) const { return data_.data() + c * h_ * w_; }

    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    // Copies into a {1,C,H,W} tensor (model input layout).
    Tensor to_tensor() const {
        Tensor t({1, c_, h_, w_});
        std::copy(data_.begin(), data_.end(), t.vec().begin());
        return t;
    }

    static Image from_tensor(const Tensor& t) {
        assert(t.rank() == 4 && t.dim(0) == 1);
        Image im(t.dim(1), t.dim(2), t.dim(3));
        std::copy(t.vec().begin(), t.vec().end(), im.vec().begin());
        return im;
    }

  private:
    int64_t c_, h_, w_;
    std::vector<double> data_;
};

inline Image clamp01(Image im) {
    for (double& v : im.vec()) v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return im;
}

// Counterclockwise quarter turns; output dims swap when k is odd.
inline Image rot90(const Image& im, int k) {
    k = ((k % 4) + 4) % 4;
    if (k == 0) return im;
    const int64_t c = im.channels(), h = im.height(), w = im.width();
    if (k == 2) {
        Image out(c, h, w);
        for (int64_t ch = 0; ch < c; ++ch)
            for (int64_t y = 0; y < h; ++y)
                for (int64_t x = 0; x < w; ++x)
                    out.at(ch, y, x) = im.at(ch, h - 1 - y, w - 1 - x);
        return out;
    }
    Image out(c, w, h);
    for (int64_t ch = 0; ch < c; ++ch)
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x) {
                if (k == 1) out.at(ch, w - 1 - x, y) = im.at(ch, y, x);
                else out.at(ch, x, h - 1 - y) = im.at(ch, y, x);  // k == 3
            }
    return out;
}

inline Image hflip(const Image& im) {
    const int64_t c = im.channels(), h = im.height(), w = im.width();
    Image out(c, h, w);
    for (int64_t ch = 0; ch < c; ++ch)
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x) out.at(ch, y, x) = im.at(ch, y, w - 1 - x);
    return out;
}

namespace detail {

// Sample positions and weights for 1-d bilinear resize with half-pixel
// centers (src = (dst + 0.5) * scale - 0.5, edges clamped).
struct LerpTap {
    int64_t i0, i1;
    double w0, w1;
};

inline LerpTap lerp_tap(int64_t dst, int64_t dst_n, int64_t src_n) {
    const double scale = static_cast<double>(src_n) / static_cast<double>(dst_n);
    double s = (static_cast<double>(dst) + 0.5) * scale - 0.5;
    if (s < 0.0) s = 0.0;
    const double smax = static_cast<double>(src_n - 1);
    if (s > smax) s = smax;
    LerpTap t;
    t.i0 = static_cast<int64_t>(s);
    t.i1 = t.i0 + 1 < src_n ? t.i0 + 1 : t.i0;
    t.w1 = s - static_cast<double>(t.i0);
    t.w0 = 1.0 - t.w1;
    return t;
}

}  // namespace detail

inline Image bilinear_resize(const Image& im, int64_t oh, int64_t ow) {
    if (im.height() == oh && im.width() == ow) return im;
    Image out(im.channels(), oh, ow);
    for (int64_t y = 0; y < oh; ++y) {
        const auto ty = detail::lerp_tap(y, oh, im.height());
        for (int64_t x = 0; x < ow; ++x) {
            const auto tx = detail::lerp_tap(x, ow, im.width());
            for (int64_t c = 0; c < im.channels(); ++c)
                out.at(c, y, x) = ty.w0 * (tx.w0 * im.at(c, ty.i0, tx.i0) +
                                           tx.w1 * im.at(c, ty.i0, tx.i1)) +
                                  ty.w1 * (tx.w0 * im.at(c, ty.i1, tx.i0) +
                                           tx.w1 * im.at(c, ty.i1, tx.i1));
        }
    }
    return out;
}

// Adjoint of bilinear_resize: scatters a gradient at (oh,ow) back to the
// source grid (ih,iw) with the transposed interpolation weights.
inline Image bilinear_resize_vjp(const Image& grad_out, int64_t ih, int64_t iw) {
    if (grad_out.height() == ih && grad_out.width() == iw) return grad_out;
    Image grad_in(grad_out.channels(), ih, iw);
    for (int64_t y = 0; y < grad_out.height(); ++y) {
        const auto ty = detail::lerp_tap(y, grad_out.height(), ih);
        for (int64_t x = 0; x < grad_out.width(); ++x) {
            const auto tx = detail::lerp_tap(x, grad_out.width(), iw);
            for (int64_t c = 0; c < grad_out.channels(); ++c) {
                const double g = grad_out.at(c, y, x);
                grad_in.at(c, ty.i0, tx.i0) += ty.w0 * tx.w0 * g;
                grad_in.at(c, ty.i0, tx.i1) += ty.w0 * tx.w1 * g;
                grad_in.at(c, ty.i1, tx.i0) += ty.w1 * tx.w0 * g;
                grad_in.at(c, ty.i1, tx.i1) += ty.w1 * tx.w1 * g;
            }
        }
    }
    return grad_in;
}

}  // namespace uwdiff

#endif  // UWDIFF_CORE_IMAGE_HPP_
