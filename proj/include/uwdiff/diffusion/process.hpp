#ifndef UWDIFF_DIFFUSION_PROCESS_HPP_
#define UWDIFF_DIFFUSION_PROCESS_HPP_

#include <cmath>

#include "uwdiff/core/rng.hpp"
#include "uwdiff/core/tensor.hpp"
#include "uwdiff/diffusion/schedule.hpp"

namespace uwdiff {

// Closed-form draw from q(x_t | x_0): sqrt(abar_t) x0 + sqrt(1-abar_t) eps.
// `eps` is written so the caller can form training targets.
inline Tensor q_sample(const Schedule& sched, const Tensor& x0, int t,
                       Rng& rng, Tensor* eps_out = nullptr) {
    const double sa = std::sqrt(sched.alpha_bar(t));
    const double sb = std::sqrt(1.0 - sched.alpha_bar(t));
    Tensor xt(x0.shape());
    Tensor eps(x0.shape());
    for (int64_t i = 0; i < x0.numel(); ++i) {
        eps[i] = rng.normal();
        xt[i] = sa * x0[i] + sb * eps[i];
    }
    if (eps_out) *eps_out = std::move(eps);
    return xt;
}

// Same draw with caller-provided noise (deterministic paths, tests).
inline Tensor q_sample_with(const Schedule& sched, const Tensor& x0, int t,
                            const Tensor& eps) {
    const double sa = std::sqrt(sched.alpha_bar(t));
    const double sb = std::sqrt(1.0 - sched.alpha_bar(t));
    Tensor xt(x0.shape());
    for (int64_t i = 0; i < x0.numel(); ++i) xt[i] = sa * x0[i] + sb * eps[i];
    return xt;
}

// Mean of p_theta(x_{t-1} | x_t) given the noise prediction:
// (x_t - beta_t/sqrt(1-abar_t) * eps_hat) / sqrt(alpha_t).
inline Tensor posterior_mean(const Schedule& sched, const Tensor& xt,
                             const Tensor& eps_hat, int t) {
    const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha(t));
    const double coef = sched.beta(t) / std::sqrt(1.0 - sched.alpha_bar(t));
    Tensor mean(xt.shape());
    for (int64_t i = 0; i < xt.numel(); ++i)
        mean[i] = inv_sqrt_alpha * (xt[i] - coef * eps_hat[i]);
    return mean;
}

// Score of the marginal q(x_t), recovered from the noise prediction:
// grad_x log q(x_t) = -eps_hat / sqrt(1 - abar_t).
inline Tensor score_from_eps(const Schedule& sched, const Tensor& eps_hat, int t) {
    const double scale = -1.0 / std::sqrt(1.0 - sched.alpha_bar(t));
    Tensor score(eps_hat.shape());
    for (int64_t i = 0; i < eps_hat.numel(); ++i) score[i] = scale * eps_hat[i];
    return score;
}

// Estimate of x_0 implied by (x_t, eps_hat).
inline Tensor predict_x0(const Schedule& sched, const Tensor& xt,
                         const Tensor& eps_hat, int t) {
    const double sa = std::sqrt(sched.alpha_bar(t));
    const double sb = std::sqrt(1.0 - sched.alpha_bar(t));
    Tensor x0(xt.shape());
    for (int64_t i = 0; i < xt.numel(); ++i) x0[i] = (xt[i] - sb * eps_hat[i]) / sa;
    return x0;
}

}  // namespace uwdiff

#endif  // UWDIFF_DIFFUSION_PROCESS_HPP_
