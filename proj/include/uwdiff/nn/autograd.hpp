#ifndef UWDIFF_NN_AUTOGRAD_HPP_
#define UWDIFF_NN_AUTOGRAD_HPP_

#include <cblas.h>

#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "uwdiff/core/tensor.hpp"

extern "C" void openblas_set_num_threads(int);

namespace uwdiff {

// BLAS is pinned to one thread: the library's reproducibility contract
// includes bitwise-stable results for a fixed seed, and threaded GEMM can
// reorder reductions.
inline void ensure_single_thread_blas() {
    static const bool done = [] {
        openblas_set_num_threads(1);
        return true;
    }();
    (void)done;
}

struct Var {
    int32_t id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Values are computed eagerly; each op records a
// closure that routes the output gradient to the inputs. The tape is
// rebuilt every training step and cleared afterwards. With gradients
// disabled the ops only compute values (sampling mode).
class Tape {
  public:
    Tape() { ensure_single_thread_blas(); }

    void set_grad_enabled(bool on) { grad_enabled_ = on; }
    bool grad_enabled() const { return grad_enabled_; }

    size_t size() const { return nodes_.size(); }

    void clear() { nodes_.clear(); }

    // Constant leaf: no gradient flows into it.
    Var input(Tensor v) { return push(std::move(v), false, {}); }

    // Trainable leaf: gradient is accumulated and readable after backward.
    Var param(Tensor v) { return push(std::move(v), grad_enabled_, {}); }

    const Tensor& val(Var v) const { return nodes_[static_cast<size_t>(v.id)].value; }

    const Tensor& grad(Var v) const {
        const Node& n = nodes_[static_cast<size_t>(v.id)];
        if (n.grad.numel() == 0)
            throw std::logic_error("grad read before backward or on a constant");
        return n.grad;
    }

    // ---- ops ----

    Var add(Var a, Var b) {
        const Tensor& ta = val(a);
        const Tensor& tb = val(b);
        assert(ta.same_shape(tb));
        Tensor out(ta.shape());
        for (int64_t i = 0; i < out.numel(); ++i) out[i] = ta[i] + tb[i];
        Var y = push(std::move(out), needs(a) || needs(b), {a, b});
        if (recorded(y)) {
            record(y, [this, a, b, y] {
                const Tensor& g = grad_of(y);
                if (needs(a)) {
                    Tensor& ga = grad_ref(a);
                    for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
                }
                if (needs(b)) {
                    Tensor& gb = grad_ref(b);
                    for (int64_t i = 0; i < g.numel(); ++i) gb[i] += g[i];
                }
            });
        }
        return y;
    }

    Var silu(Var x) {
        const Tensor& tx = val(x);
        Tensor out(tx.shape());
        for (int64_t i = 0; i < out.numel(); ++i) {
            const double s = 1.0 / (1.0 + std::exp(-tx[i]));
            out[i] = tx[i] * s;
        }
        Var y = push(std::move(out), needs(x), {x});
        if (recorded(y)) {
            record(y, [this, x, y] {
                const Tensor& g = grad_of(y);
                const Tensor& tx = val(x);
                Tensor& gx = grad_ref(x);
                for (int64_t i = 0; i < g.numel(); ++i) {
                    const double s = 1.0 / (1.0 + std::exp(-tx[i]));
                    gx[i] += g[i] * s * (1.0 + tx[i] * (1.0 - s));
                }
            });
        }
        return y;
    }

    // x{N,C,H,W} conv w{OC,C,3,3} + b{OC}, stride 1, zero pad 1.
    Var conv2d_3x3(Var x, Var w, Var b) {
        const Tensor& tx = val(x);
        const Tensor& tw = val(w);
        const Tensor& tb = val(b);
        assert(tx.rank() == 4 && tw.rank() == 4);
        const int64_t N = tx.dim(0), C = tx.dim(1), H = tx.dim(2), W = tx.dim(3);
        const int64_t OC = tw.dim(0);
        assert(tw.dim(1) == C && tw.dim(2) == 3 && tw.dim(3) == 3);
        assert(tb.numel() == OC);

        const int64_t K = C * 9, HW = H * W;
        Tensor out({N, OC, H, W});
        std::vector<double> cols(static_cast<size_t>(K * HW));
        for (int64_t n = 0; n < N; ++n) {
            im2col(tx.data() + n * C * HW, C, H, W, cols.data());
            cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans,
                        static_cast<int>(OC), static_cast<int>(HW), static_cast<int>(K),
                        1.0, tw.data(), static_cast<int>(K), cols.data(),
                        static_cast<int>(HW), 0.0, out.data() + n * OC * HW,
                        static_cast<int>(HW));
            for (int64_t oc = 0; oc < OC; ++oc) {
                double* p = out.data() + (n * OC + oc) * HW;
                for (int64_t i = 0; i < HW; ++i) p[i] += tb[oc];
            }
        }

        Var y = push(std::move(out), needs(x) || needs(w) || needs(b), {x, w, b});
        if (recorded(y)) {
            record(y, [this, x, w, b, y, N, C, H, W, OC] {
                const Tensor& g = grad_of(y);
                const Tensor& tx = val(x);
                const Tensor& tw = val(w);
                const int64_t K = C * 9, HW = H * W;
                std::vector<double> cols(static_cast<size_t>(K * HW));
                std::vector<double> dcols(static_cast<size_t>(K * HW));
                for (int64_t n = 0; n < N; ++n) {
                    const double* gout = g.data() + n * OC * HW;
                    if (needs(w)) {
                        im2col(tx.data() + n * C * HW, C, H, W, cols.data());
                        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans,
                                    static_cast<int>(OC), static_cast<int>(K),
                                    static_cast<int>(HW), 1.0, gout,
                                    static_cast<int>(HW), cols.data(),
                                    static_cast<int>(HW), 1.0, grad_ref(w).data(),
                                    static_cast<int>(K));
                    }
                    if (needs(b)) {
                        Tensor& gb = grad_ref(b);
                        for (int64_t oc = 0; oc < OC; ++oc) {
                            double s = 0.0;
                            const double* p = gout + oc * HW;
                            for (int64_t i = 0; i < HW; ++i) s += p[i];
                            gb[oc] += s;
                        }
                    }
                    if (needs(x)) {
                        cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans,
                                    static_cast<int>(K), static_cast<int>(HW),
                                    static_cast<int>(OC), 1.0, tw.data(),
                                    static_cast<int>(K), gout, static_cast<int>(HW),
                                    0.0, dcols.data(), static_cast<int>(HW));
                        col2im_acc(dcols.data(), C, H, W,
                                   grad_ref(x).data() + n * C * HW);
                    }
                }
            });
        }
        return y;
    }

    // x{N,I} w{I,O} b{O} -> {N,O}
    Var linear(Var x, Var w, Var b) {
        const Tensor& tx = val(x);
        const Tensor& tw = val(w);
        const Tensor& tb = val(b);
        assert(tx.rank() == 2 && tw.rank() == 2);
        const int64_t N = tx.dim(0), I = tx.dim(1), O = tw.dim(1);
        assert(tw.dim(0) == I && tb.numel() == O);

        Tensor out({N, O});
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(N),
                    static_cast<int>(O), static_cast<int>(I), 1.0, tx.data(),
                    static_cast<int>(I), tw.data(), static_cast<int>(O), 0.0,
                    out.data(), static_cast<int>(O));
        for (int64_t n = 0; n < N; ++n)
            for (int64_t o = 0; o < O; ++o) out[n * O + o] += tb[o];

        Var y = push(std::move(out), needs(x) || needs(w) || needs(b), {x, w, b});
        if (recorded(y)) {
            record(y, [this, x, w, b, y, N, I, O] {
                const Tensor& g = grad_of(y);
                if (needs(x)) {
                    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans,
                                static_cast<int>(N), static_cast<int>(I),
                                static_cast<int>(O), 1.0, g.data(), static_cast<int>(O),
                                val(w).data(), static_cast<int>(O), 1.0,
                                grad_ref(x).data(), static_cast<int>(I));
                }
                if (needs(w)) {
                    cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans,
                                static_cast<int>(I), static_cast<int>(O),
                                static_cast<int>(N), 1.0, val(x).data(),
                                static_cast<int>(I), g.data(), static_cast<int>(O), 1.0,
                                grad_ref(w).data(), static_cast<int>(O));
                }
                if (needs(b)) {
                    Tensor& gb = grad_ref(b);
                    for (int64_t n = 0; n < N; ++n)
                        for (int64_t o = 0; o < O; ++o) gb[o] += g[n * O + o];
                }
            });
        }
        return y;
    }

    // 2x2 mean pooling, stride 2; H and W must be even.
    Var avgpool2(Var x) {
        const Tensor& tx = val(x);
        const int64_t N = tx.dim(0), C = tx.dim(1), H = tx.dim(2), W = tx.dim(3);
        assert(H % 2 == 0 && W % 2 == 0);
        Tensor out({N, C, H / 2, W / 2});
        for (int64_t n = 0; n < N; ++n)
            for (int64_t c = 0; c < C; ++c)
                for (int64_t i = 0; i < H / 2; ++i)
                    for (int64_t j = 0; j < W / 2; ++j)
                        out.at(n, c, i, j) =
                            0.25 * (tx.at(n, c, 2 * i, 2 * j) + tx.at(n, c, 2 * i, 2 * j + 1) +
                                    tx.at(n, c, 2 * i + 1, 2 * j) + tx.at(n, c, 2 * i + 1, 2 * j + 1));
        Var y = push(std::move(out), needs(x), {x});
        if (recorded(y)) {
            record(y, [this, x, y, N, C, H, W] {
                const Tensor& g = grad_of(y);
                Tensor& gx = grad_ref(x);
                for (int64_t n = 0; n < N; ++n)
                    for (int64_t c = 0; c < C; ++c)
                        for (int64_t i = 0; i < H / 2; ++i)
                            for (int64_t j = 0; j < W / 2; ++j) {
                                const double v = 0.25 * g.at(n, c, i, j);
                                gx.at(n, c, 2 * i, 2 * j) += v;
                                gx.at(n, c, 2 * i, 2 * j + 1) += v;
                                gx.at(n, c, 2 * i + 1, 2 * j) += v;
                                gx.at(n, c, 2 * i + 1, 2 * j + 1) += v;
                            }
            });
        }
        return y;
    }

    // Nearest-neighbour 2x upsampling.
    Var upsample2(Var x) {
        const Tensor& tx = val(x);
        const int64_t N = tx.dim(0), C = tx.dim(1), H = tx.dim(2), W = tx.dim(3);
        Tensor out({N, C, 2 * H, 2 * W});
        for (int64_t n = 0; n < N; ++n)
            for (int64_t c = 0; c < C; ++c)
                for (int64_t i = 0; i < H; ++i)
                    for (int64_t j = 0; j < W; ++j) {
                        const double v = tx.at(n, c, i, j);
                        out.at(n, c, 2 * i, 2 * j) = v;
                        out.at(n, c, 2 * i, 2 * j + 1) = v;
                        out.at(n, c, 2 * i + 1, 2 * j) = v;
                        out.at(n, c, 2 * i + 1, 2 * j + 1) = v;
                    }
        Var y = push(std::move(out), needs(x), {x});
        if (recorded(y)) {
            record(y, [this, x, y, N, C, H, W] {
                const Tensor& g = grad_of(y);
                Tensor& gx = grad_ref(x);
                for (int64_t n = 0; n < N; ++n)
                    for (int64_t c = 0; c < C; ++c)
                        for (int64_t i = 0; i < H; ++i)
                            for (int64_t j = 0; j < W; ++j)
                                gx.at(n, c, i, j) +=
                                    g.at(n, c, 2 * i, 2 * j) + g.at(n, c, 2 * i, 2 * j + 1) +
                                    g.at(n, c, 2 * i + 1, 2 * j) + g.at(n, c, 2 * i + 1, 2 * j + 1);
            });
        }
        return y;
    }

    // Concatenate along the channel axis.
    Var concat_c(Var a, Var b) {
        const Tensor& ta = val(a);
        const Tensor& tb = val(b);
        const int64_t N = ta.dim(0), Ca = ta.dim(1), Cb = tb.dim(1);
        const int64_t H = ta.dim(2), W = ta.dim(3);
        assert(tb.dim(0) == N && tb.dim(2) == H && tb.dim(3) == W);
        Tensor out({N, Ca + Cb, H, W});
        const int64_t hw = H * W;
        for (int64_t n = 0; n < N; ++n) {
            std::copy(ta.data() + n * Ca * hw, ta.data() + (n + 1) * Ca * hw,
                      out.data() + n * (Ca + Cb) * hw);
            std::copy(tb.data() + n * Cb * hw, tb.data() + (n + 1) * Cb * hw,
                      out.data() + (n * (Ca + Cb) + Ca) * hw);
        }
        Var y = push(std::move(out), needs(a) || needs(b), {a, b});
        if (recorded(y)) {
            record(y, [this, a, b, y, N, Ca, Cb, hw] {
                const Tensor& g = grad_of(y);
                if (needs(a)) {
                    Tensor& ga = grad_ref(a);
                    for (int64_t n = 0; n < N; ++n) {
                        const double* src = g.data() + n * (Ca + Cb) * hw;
                        double* dst = ga.data() + n * Ca * hw;
                        for (int64_t i = 0; i < Ca * hw; ++i) dst[i] += src[i];
                    }
                }
                if (needs(b)) {
                    Tensor& gb = grad_ref(b);
                    for (int64_t n = 0; n < N; ++n) {
                        const double* src = g.data() + (n * (Ca + Cb) + Ca) * hw;
                        double* dst = gb.data() + n * Cb * hw;
                        for (int64_t i = 0; i < Cb * hw; ++i) dst[i] += src[i];
                    }
                }
            });
        }
        return y;
    }

    // x{N,C,H,W} + t{N,C} broadcast over the spatial axes.
    Var add_channel_bias(Var x, Var t) {
        const Tensor& tx = val(x);
        const Tensor& tt = val(t);
        const int64_t N = tx.dim(0), C = tx.dim(1), H = tx.dim(2), W = tx.dim(3);
        assert(tt.rank() == 2 && tt.dim(0) == N && tt.dim(1) == C);
        Tensor out(tx.shape());
        const int64_t hw = H * W;
        for (int64_t n = 0; n < N; ++n)
            for (int64_t c = 0; c < C; ++c) {
                const double bias = tt[n * C + c];
                const double* src = tx.data() + (n * C + c) * hw;
                double* dst = out.data() + (n * C + c) * hw;
                for (int64_t i = 0; i < hw; ++i) dst[i] = src[i] + bias;
            }
        Var y = push(std::move(out), needs(x) || needs(t), {x, t});
        if (recorded(y)) {
            record(y, [this, x, t, y, N, C, hw] {
                const Tensor& g = grad_of(y);
                if (needs(x)) {
                    Tensor& gx = grad_ref(x);
                    for (int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
                }
                if (needs(t)) {
                    Tensor& gt = grad_ref(t);
                    for (int64_t n = 0; n < N; ++n)
                        for (int64_t c = 0; c < C; ++c) {
                            double s = 0.0;
                            const double* p = g.data() + (n * C + c) * hw;
                            for (int64_t i = 0; i < hw; ++i) s += p[i];
                            gt[n * C + c] += s;
                        }
                }
            });
        }
        return y;
    }

    // Mean squared error against a constant target; returns a scalar node.
    Var mse(Var pred, const Tensor& target) {
        const Tensor& tp = val(pred);
        assert(tp.same_shape(target));
        double acc = 0.0;
        for (int64_t i = 0; i < tp.numel(); ++i) {
            const double d = tp[i] - target[i];
            acc += d * d;
        }
        Tensor out({1});
        out[0] = acc / static_cast<double>(tp.numel());
        Var y = push(std::move(out), needs(pred), {pred});
        if (recorded(y)) {
            Tensor tgt = target;
            record(y, [this, pred, y, tgt = std::move(tgt)] {
                const double gy = grad_of(y)[0];
                const Tensor& tp = val(pred);
                Tensor& gp = grad_ref(pred);
                const double scale = 2.0 * gy / static_cast<double>(tp.numel());
                for (int64_t i = 0; i < tp.numel(); ++i)
                    gp[i] += scale * (tp[i] - tgt[i]);
            });
        }
        return y;
    }

    // Seeds d(loss)/d(loss) = 1 and runs the recorded closures in reverse.
    void backward(Var loss) {
        if (!grad_enabled_) throw std::logic_error("backward with grads disabled");
        Node& ln = nodes_[static_cast<size_t>(loss.id)];
        if (ln.value.numel() != 1) throw std::logic_error("backward needs a scalar loss");
        grad_ref(loss)[0] = 1.0;
        for (int32_t i = static_cast<int32_t>(nodes_.size()) - 1; i >= 0; --i) {
            Node& n = nodes_[static_cast<size_t>(i)];
            if (n.back && n.grad.numel() != 0) n.back();
        }
    }

  private:
    struct Node {
        Tensor value;
        Tensor grad;  // allocated lazily; empty until touched
        bool needs_grad = false;
        std::function<void()> back;
    };

    Var push(Tensor value, bool needs_grad, std::initializer_list<Var> inputs) {
        (void)inputs;
        Node n;
        n.value = std::move(value);
        n.needs_grad = grad_enabled_ && needs_grad;
        nodes_.push_back(std::move(n));
        return Var{static_cast<int32_t>(nodes_.size() - 1)};
    }

    bool needs(Var v) const { return nodes_[static_cast<size_t>(v.id)].needs_grad; }
    bool recorded(Var y) const { return grad_enabled_ && needs(y); }

    void record(Var y, std::function<void()> fn) {
        nodes_[static_cast<size_t>(y.id)].back = std::move(fn);
    }

    Tensor& grad_ref(Var v) {
        Node& n = nodes_[static_cast<size_t>(v.id)];
        if (n.grad.numel() == 0) n.grad = Tensor(n.value.shape());
        return n.grad;
    }

    // Gradient of an output node; empty grad means no downstream consumer
    // touched it, which backward() treats as all zeros by skipping.
    const Tensor& grad_of(Var v) const { return nodes_[static_cast<size_t>(v.id)].grad; }

    static void im2col(const double* x, int64_t C, int64_t H, int64_t W, double* cols) {
        const int64_t HW = H * W;
        for (int64_t c = 0; c < C; ++c)
            for (int64_t ky = 0; ky < 3; ++ky)
                for (int64_t kx = 0; kx < 3; ++kx) {
                    double* dst = cols + ((c * 3 + ky) * 3 + kx) * HW;
                    for (int64_t y = 0; y < H; ++y) {
                        const int64_t sy = y + ky - 1;
                        if (sy < 0 || sy >= H) {
                            std::fill(dst + y * W, dst + (y + 1) * W, 0.0);
                            continue;
                        }
                        const double* src = x + (c * H + sy) * W;
                        for (int64_t xw = 0; xw < W; ++xw) {
                            const int64_t sx = xw + kx - 1;
                            dst[y * W + xw] = (sx < 0 || sx >= W) ? 0.0 : src[sx];
                        }
                    }
                }
    }

    static void col2im_acc(const double* cols, int64_t C, int64_t H, int64_t W,
                           double* dx) {
        const int64_t HW = H * W;
        for (int64_t c = 0; c < C; ++c)
            for (int64_t ky = 0; ky < 3; ++ky)
                for (int64_t kx = 0; kx < 3; ++kx) {
                    const double* src = cols + ((c * 3 + ky) * 3 + kx) * HW;
                    for (int64_t y = 0; y < H; ++y) {
                        const int64_t sy = y + ky - 1;
                        if (sy < 0 || sy >= H) continue;
                        double* dst = dx + (c * H + sy) * W;
                        for (int64_t xw = 0; xw < W; ++xw) {
                            const int64_t sx = xw + kx - 1;
                            if (sx >= 0 && sx < W) dst[sx] += src[y * W + xw];
                        }
                    }
                }
    }

    std::vector<Node> nodes_;
    bool grad_enabled_ = true;
};

}  // namespace uwdiff

#endif  // UWDIFF_NN_AUTOGRAD_HPP_
