#ifndef UWDIFF_CLIP_SCORE_CURVE_HPP_
#define UWDIFF_CLIP_SCORE_CURVE_HPP_

#include <cstdint>
#include <vector>

#include "uwdiff/clip/classifier.hpp"
#include "uwdiff/core/image.hpp"
#include "uwdiff/core/rng.hpp"
#include "uwdiff/diffusion/schedule.hpp"

namespace uwdiff {

struct ScorePoint {
    int t;
    double underwater_prob;
    double grad_rms;  // RMS of grad log p_u over the pixels
};

// Classifier response along the forward noising trajectory of one image.
// Each probed step draws its own noise from a per-step seed so the curve
// is reproducible and pointwise independent. The classifier sees the raw
// noisy values (no clamping), matching how guidance evaluates it.
inline std::vector<ScorePoint> underwater_score_curve(const ClipClassifier& clf,
                                                      const Schedule& sched,
                                                      const Image& x0,
                                                      const std::vector<int>& ts,
                                                      uint64_t seed) {
    std::vector<ScorePoint> out;
    out.reserve(ts.size());
    for (const int t : ts) {
        Rng rng(item_seed(seed, static_cast<uint64_t>(t)));
        const double sa = std::sqrt(sched.alpha_bar(t));
        const double sb = std::sqrt(1.0 - sched.alpha_bar(t));
        Image xt(3, x0.height(), x0.width());
        for (int64_t i = 0; i < x0.numel(); ++i)
            xt.vec()[static_cast<size_t>(i)] =
                sa * x0.vec()[static_cast<size_t>(i)] + sb * rng.normal();

        ScorePoint p;
        p.t = t;
        p.underwater_prob = clf.underwater_prob(xt);
        const Image g = clf.log_underwater_grad(xt);
        double acc = 0.0;
        for (const double v : g.vec()) acc += v * v;
        p.grad_rms = std::sqrt(acc / static_cast<double>(g.numel()));
        out.push_back(p);
    }
    return out;
}

}  // namespace uwdiff

#endif  // UWDIFF_CLIP_SCORE_CURVE_HPP_
