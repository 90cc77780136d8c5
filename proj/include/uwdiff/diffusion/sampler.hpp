#ifndef UWDIFF_DIFFUSION_SAMPLER_HPP_
#define UWDIFF_DIFFUSION_SAMPLER_HPP_

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwdiff/core/rng.hpp"
#include "uwdiff/core/tensor.hpp"
#include "uwdiff/diffusion/process.hpp"
#include "uwdiff/diffusion/schedule.hpp"

namespace uwdiff {

// Noise predictor interface: maps (x_t, t) to eps_hat. Conditioning and
// guidance are composed by the caller before handing the function in.
using EpsFn = std::function<Tensor(const Tensor&, int)>;

// Optional clamp on the implied x_0 inside each reverse step. Image
// sampling needs this: at large t the x_0 implied by an imperfect noise
// prediction is amplified by 1/sqrt(abar_t), and without a bound the
// trajectory drifts off the data range and never recovers. Disabled, the
// steps are the pure update rules.
struct X0Clamp {
    bool enabled = false;
    double lo = 0.0;
    double hi = 1.0;
};

namespace detail {
inline double clamp_x0_value(double v, const X0Clamp& c) {
    if (!c.enabled) return v;
    if (v < c.lo) return c.lo;
    if (v > c.hi) return c.hi;
    return v;
}
}  // namespace detail

// One ancestral step t -> t-1. Injected noise is sqrt(beta_t) z with
// z = 0 on the final step. With clamping, the posterior mean is formed
// from the clamped x_0 estimate:
//   mu = sqrt(abar_{t-1}) beta_t / (1-abar_t) * x0
//      + sqrt(alpha_t) (1-abar_{t-1}) / (1-abar_t) * x_t,
// which reduces to the eps-form mean when the clamp is inactive.
inline Tensor ddpm_step(const Schedule& sched, const Tensor& xt,
                        const Tensor& eps_hat, int t, Rng& rng,
                        const X0Clamp& clamp = {}) {
    Tensor x(xt.shape());
    if (!clamp.enabled) {
        x = posterior_mean(sched, xt, eps_hat, t);
    } else {
        const double ab = sched.alpha_bar(t);
        const double ab_prev = sched.alpha_bar(t - 1);
        const double sa = std::sqrt(ab);
        const double sb = std::sqrt(1.0 - ab);
        const double coef_x0 = std::sqrt(ab_prev) * sched.beta(t) / (1.0 - ab);
        const double coef_xt = std::sqrt(sched.alpha(t)) * (1.0 - ab_prev) / (1.0 - ab);
        for (int64_t i = 0; i < xt.numel(); ++i) {
            const double x0 = detail::clamp_x0_value((xt[i] - sb * eps_hat[i]) / sa, clamp);
            x[i] = coef_x0 * x0 + coef_xt * xt[i];
        }
    }
    if (t > 1) {
        const double sigma = std::sqrt(sched.beta(t));
        for (int64_t i = 0; i < x.numel(); ++i) x[i] += sigma * rng.normal();
    }
    return x;
}

// One DDIM step t_cur -> t_prev (t_prev may be 0, meaning x_0 directly).
// eta = 0 is deterministic; eta = 1 recovers the ancestral variance.
// With clamping, the direction term uses the noise implied by the clamped
// x_0 so the state stays consistent with it.
inline Tensor ddim_step(const Schedule& sched, const Tensor& xt,
                        const Tensor& eps_hat, int t_cur, int t_prev,
                        double eta, Rng& rng, const X0Clamp& clamp = {}) {
    const double ab_cur = sched.alpha_bar(t_cur);
    const double ab_prev = sched.alpha_bar(t_prev);
    const double sigma =
        eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab_cur)) *
        std::sqrt(1.0 - ab_cur / ab_prev);

    const double sa_cur = std::sqrt(ab_cur);
    const double sb_cur = std::sqrt(1.0 - ab_cur);
    const double sa_prev = std::sqrt(ab_prev);
    double dir_coef_sq = 1.0 - ab_prev - sigma * sigma;
    if (dir_coef_sq < 0.0) dir_coef_sq = 0.0;  // rounding guard
    const double dir_coef = std::sqrt(dir_coef_sq);

    Tensor x(xt.shape());
    for (int64_t i = 0; i < xt.numel(); ++i) {
        const double x0 = detail::clamp_x0_value((xt[i] - sb_cur * eps_hat[i]) / sa_cur, clamp);
        const double eps_impl =
            clamp.enabled ? (xt[i] - sa_cur * x0) / sb_cur : eps_hat[i];
        x[i] = sa_prev * x0 + dir_coef * eps_impl;
    }
    if (sigma > 0.0 && t_prev > 0)
        for (int64_t i = 0; i < x.numel(); ++i) x[i] += sigma * rng.normal();
    return x;
}

// Evenly spaced DDIM subsequence tau_1 < ... < tau_S = T (returned
// descending). steps == T degenerates to the full ancestral grid.
inline std::vector<int> ddim_timesteps(int T, int steps) {
    if (steps < 1 || steps > T) throw std::invalid_argument("ddim steps must be in 1..T");
    std::vector<int> ts(static_cast<size_t>(steps));
    for (int i = 0; i < steps; ++i) {
        int t = static_cast<int>(std::llround(static_cast<double>(i + 1) * T / steps));
        if (t < 1) t = 1;
        ts[static_cast<size_t>(steps - 1 - i)] = t;
    }
    return ts;
}

struct SamplerConfig {
    std::string kind = "ddpm";  // "ddpm" | "ddim"
    int steps = 0;              // ddim only; 0 means full T
    double eta = 0.0;           // ddim only
    X0Clamp clamp;              // bound the implied x_0 each step
};

// Runs the full reverse process from x_T ~ N(0, I).
inline Tensor sample(const Schedule& sched, const EpsFn& eps_fn,
                     const std::vector<int64_t>& shape, const SamplerConfig& cfg,
                     Rng& rng) {
    Tensor x(shape);
    for (int64_t i = 0; i < x.numel(); ++i) x[i] = rng.normal();

    if (cfg.kind == "ddpm") {
        for (int t = sched.T(); t >= 1; --t) {
            const Tensor eps_hat = eps_fn(x, t);
            x = ddpm_step(sched, x, eps_hat, t, rng, cfg.clamp);
        }
        return x;
    }
    if (cfg.kind == "ddim") {
        const int steps = cfg.steps > 0 ? cfg.steps : sched.T();
        const std::vector<int> ts = ddim_timesteps(sched.T(), steps);
        for (size_t i = 0; i < ts.size(); ++i) {
            const int t_cur = ts[i];
            const int t_prev = i + 1 < ts.size() ? ts[i + 1] : 0;
            const Tensor eps_hat = eps_fn(x, t_cur);
            x = ddim_step(sched, x, eps_hat, t_cur, t_prev, cfg.eta, rng, cfg.clamp);
        }
        return x;
    }
    throw std::invalid_argument("unknown sampler kind: " + cfg.kind);
}

}  // namespace uwdiff

#endif  // UWDIFF_DIFFUSION_SAMPLER_HPP_
