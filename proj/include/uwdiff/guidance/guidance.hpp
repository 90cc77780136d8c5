#ifndef UWDIFF_GUIDANCE_GUIDANCE_HPP_
#define UWDIFF_GUIDANCE_GUIDANCE_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "uwdiff/clip/classifier.hpp"
#include "uwdiff/core/image.hpp"
#include "uwdiff/core/rng.hpp"
#include "uwdiff/core/tensor.hpp"
#include "uwdiff/denoiser/unet.hpp"
#include "uwdiff/diffusion/sampler.hpp"
#include "uwdiff/diffusion/schedule.hpp"

namespace uwdiff {

struct GuidanceConfig {
    double lambda = 0.4;   // blend weight; the classifier term is scaled by (1-lambda)
    double t_m = 1.0;      // truncation fraction: active for t <= round(t_m * T)
    double rms_clip = 1.0; // per-classifier cap on gradient RMS
    bool enabled = true;
};

inline bool guidance_active(const Schedule& sched, int t, const GuidanceConfig& cfg) {
    return cfg.enabled && t <= sched.step_of(cfg.t_m);
}

// Uniform draw over the truncated window [1, n_m].
inline int draw_truncated_step(Rng& rng, int n_m) {
    return 1 + static_cast<int>(rng.uniform_below(static_cast<uint64_t>(n_m)));
}

// Caps the RMS of a gradient image; large classifier gradients would
// otherwise dominate the noise prediction at small t.
inline void rms_clip_inplace(Image& g, double max_rms) {
    double acc = 0.0;
    for (const double v : g.vec()) acc += v * v;
    const double rms = std::sqrt(acc / static_cast<double>(g.numel()));
    if (rms > max_rms && rms > 0.0) {
        const double s = max_rms / rms;
        for (double& v : g.vec()) v *= s;
    }
}

// Classifier steering term for a batch at step t:
//   (1 - lambda) * sqrt(1 - abar_t) * mean_i clip(grad log p_underwater_i).
// Zero when the step is outside the active window. The classifiers see the
// raw noisy values; no clamping, so the gradient path stays exact.
inline Tensor guidance_term(const Schedule& sched,
                            const std::vector<const ClipClassifier*>& classifiers,
                            const Tensor& x_t, int t, const GuidanceConfig& cfg) {
    Tensor term(x_t.shape());
    if (!guidance_active(sched, t, cfg) || classifiers.empty()) return term;

    const int64_t N = x_t.dim(0), C = x_t.dim(1), H = x_t.dim(2), W = x_t.dim(3);
    const double scale = (1.0 - cfg.lambda) * std::sqrt(1.0 - sched.alpha_bar(t)) /
                         static_cast<double>(classifiers.size());
    for (int64_t n = 0; n < N; ++n) {
        Image xi(C, H, W);
        std::copy(x_t.data() + n * C * H * W, x_t.data() + (n + 1) * C * H * W,
                  xi.vec().begin());
        for (const ClipClassifier* clf : classifiers) {
            Image g = clf->log_underwater_grad(xi);
            rms_clip_inplace(g, cfg.rms_clip);
            double* dst = term.data() + n * C * H * W;
            for (int64_t i = 0; i < C * H * W; ++i) dst[i] += scale * g.vec()[static_cast<size_t>(i)];
        }
    }
    return term;
}

// Inference-time composition for diagnostics: the classifier term is
// subtracted from the network prediction, which steers sampling toward
// higher p_underwater. Enhancement does the opposite and bakes the term
// into the weights during fine-tuning instead; see the trainer.
inline EpsFn make_guided_eps_fn(Denoiser& model, const Schedule& sched,
                                const Tensor& cond,
                                std::vector<const ClipClassifier*> classifiers,
                                const GuidanceConfig& cfg) {
    return [&model, &sched, cond, classifiers = std::move(classifiers), cfg](
               const Tensor& x, int t) {
        Tensor eps = model.predict_eps(x, cond, std::vector<int>(static_cast<size_t>(x.dim(0)), t));
        if (guidance_active(sched, t, cfg)) {
            const Tensor term = guidance_term(sched, classifiers, x, t, cfg);
            for (int64_t i = 0; i < eps.numel(); ++i) eps[i] -= term[i];
        }
        return eps;
    };
}

}  // namespace uwdiff

#endif  // UWDIFF_GUIDANCE_GUIDANCE_HPP_
