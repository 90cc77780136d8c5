#ifndef UWDIFF_DENOISER_UNET_HPP_
#define UWDIFF_DENOISER_UNET_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwdiff/core/rng.hpp"
#include "uwdiff/core/tensor.hpp"
#include "uwdiff/nn/autograd.hpp"

namespace uwdiff {

struct DenoiserConfig {
    int in_channels = 6;  // conditioning image stacked on the noisy image
    int out_channels = 3;
    int base_channels = 16;
    int levels = 3;   // encoder depth; channel count doubles per level
    int time_dim = 32;

    bool operator==(const DenoiserConfig&) const = default;
};

// Small conditional U-Net noise predictor. Input is concat(cond, x_t) on
// the channel axis; a sinusoidal step embedding runs through a 2-layer MLP
// and enters each block as a per-channel bias after the first convolution.
class Denoiser {
  public:
    explicit Denoiser(DenoiserConfig cfg) : cfg_(cfg) {
        if (cfg_.levels < 2) throw std::invalid_argument("denoiser needs >= 2 levels");
        if (cfg_.time_dim % 2 != 0) throw std::invalid_argument("time_dim must be even");

        const int L = cfg_.levels;
        // time MLP
        add_param("time.fc1.w", {cfg_.time_dim, cfg_.time_dim});
        add_param("time.fc1.b", {cfg_.time_dim});
        add_param("time.fc2.w", {cfg_.time_dim, cfg_.time_dim});
        add_param("time.fc2.b", {cfg_.time_dim});

        int in_ch = cfg_.in_channels;
        for (int l = 0; l < L - 1; ++l) {
            const int c = channels_at(l);
            add_block("enc" + std::to_string(l), in_ch, c);
            in_ch = c;
        }
        add_block("mid", in_ch, channels_at(L - 1));
        for (int l = L - 2; l >= 0; --l) {
            const int c = channels_at(l);
            const int cat_ch = channels_at(l + 1) + c;  // upsampled + skip
            add_block("dec" + std::to_string(l), cat_ch, c);
        }
        add_param("head.w", {cfg_.out_channels, channels_at(0), 3, 3});
        add_param("head.b", {cfg_.out_channels});
    }

    const DenoiserConfig& config() const { return cfg_; }
    size_t param_count() const { return params_.size(); }
    Tensor& param(size_t i) { return params_[i]; }
    const Tensor& param(size_t i) const { return params_[i]; }
    const std::string& param_name(size_t i) const { return names_[i]; }

    int64_t weight_count() const {
        int64_t n = 0;
        for (const Tensor& p : params_) n += p.numel();
        return n;
    }

    // Xavier-uniform weights, zero biases.
    void init_params(Rng& rng) {
        for (size_t i = 0; i < params_.size(); ++i) {
            Tensor& p = params_[i];
            if (p.rank() == 1) {
                p.fill(0.0);
                continue;
            }
            int64_t fan_in, fan_out;
            if (p.rank() == 4) {
                fan_in = p.dim(1) * 9;
                fan_out = p.dim(0) * 9;
            } else {
                fan_in = p.dim(0);
                fan_out = p.dim(1);
            }
            const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            for (int64_t j = 0; j < p.numel(); ++j) p[j] = a * (2.0 * rng.uniform() - 1.0);
        }
    }

    // Sinusoidal embedding of the (integer) diffusion steps.
    Tensor time_features(const std::vector<int>& steps) const {
        const int64_t N = static_cast<int64_t>(steps.size());
        const int64_t D = cfg_.time_dim;
        const int64_t half = D / 2;
        Tensor emb({N, D});
        for (int64_t n = 0; n < N; ++n)
            for (int64_t k = 0; k < half; ++k) {
                const double denom = half > 1 ? static_cast<double>(half - 1) : 1.0;
                const double freq = std::exp(-std::log(10000.0) * static_cast<double>(k) / denom);
                const double ang = static_cast<double>(steps[static_cast<size_t>(n)]) * freq;
                emb[n * D + k] = std::sin(ang);
                emb[n * D + half + k] = std::cos(ang);
            }
        return emb;
    }

    // Builds the graph on `tape`; binds every parameter as a tape leaf so
    // gradients can be read off after backward via bound_vars().
    Var forward(Tape& tape, const Tensor& x_t, const Tensor& cond,
                const std::vector<int>& steps) {
        const int64_t N = x_t.dim(0);
        if (cond.dim(0) != N || steps.size() != static_cast<size_t>(N))
            throw std::invalid_argument("batch size mismatch");
        const int64_t H = x_t.dim(2), W = x_t.dim(3);
        const int64_t div = int64_t{1} << (cfg_.levels - 1);
        if (H % div != 0 || W % div != 0)
            throw std::invalid_argument("spatial dims must be divisible by 2^(levels-1)");

        bound_.clear();
        for (Tensor& p : params_) bound_.push_back(tape.param(p));
        size_t next = 0;
        auto take = [&]() { return bound_[next++]; };

        // time MLP; take() calls are sequenced as separate declarations
        // because function-argument evaluation order is unspecified.
        const Var temb_in = tape.input(time_features(steps));
        const Var tw1 = take(), tb1 = take();
        Var temb = tape.silu(tape.linear(temb_in, tw1, tb1));
        const Var tw2 = take(), tb2 = take();
        temb = tape.linear(temb, tw2, tb2);

        auto run_block = [&](Var h) {
            const Var w1 = take(), b1 = take();
            const Var tw = take(), tb = take();
            const Var w2 = take(), b2 = take();
            Var x = tape.conv2d_3x3(h, w1, b1);
            x = tape.add_channel_bias(x, tape.linear(temb, tw, tb));
            x = tape.silu(x);
            x = tape.conv2d_3x3(x, w2, b2);
            return tape.silu(x);
        };

        Var h = tape.concat_c(tape.input(cond), tape.input(x_t));
        std::vector<Var> skips;
        for (int l = 0; l < cfg_.levels - 1; ++l) {
            h = run_block(h);
            skips.push_back(h);
            h = tape.avgpool2(h);
        }
        h = run_block(h);
        for (int l = cfg_.levels - 2; l >= 0; --l) {
            h = tape.upsample2(h);
            h = tape.concat_c(h, skips[static_cast<size_t>(l)]);
            h = run_block(h);
        }
        const Var hw = take(), hb = take();
        return tape.conv2d_3x3(h, hw, hb);
    }

    const std::vector<Var>& bound_vars() const { return bound_; }

    // Inference helper: fresh tape, gradients off.
    Tensor predict_eps(const Tensor& x_t, const Tensor& cond,
                       const std::vector<int>& steps) {
        Tape tape;
        tape.set_grad_enabled(false);
        return tape.val(forward(tape, x_t, cond, steps));
    }

  private:
    int channels_at(int level) const { return cfg_.base_channels << level; }

    void add_param(const std::string& name, std::vector<int64_t> shape) {
        names_.push_back(name);
        params_.emplace_back(std::move(shape));
    }

    void add_block(const std::string& prefix, int in_ch, int out_ch) {
        add_param(prefix + ".conv1.w", {out_ch, in_ch, 3, 3});
        add_param(prefix + ".conv1.b", {out_ch});
        add_param(prefix + ".temb.w", {cfg_.time_dim, out_ch});
        add_param(prefix + ".temb.b", {out_ch});
        add_param(prefix + ".conv2.w", {out_ch, out_ch, 3, 3});
        add_param(prefix + ".conv2.b", {out_ch});
    }

    DenoiserConfig cfg_;
    std::vector<std::string> names_;
    std::vector<Tensor> params_;
    std::vector<Var> bound_;
};

}  // namespace uwdiff

#endif  // UWDIFF_DENOISER_UNET_HPP_
