#ifndef UWDIFF_GUIDANCE_ENHANCE_HPP_
#define UWDIFF_GUIDANCE_ENHANCE_HPP_

#include <cstdint>

#include "uwdiff/core/image.hpp"
#include "uwdiff/core/rng.hpp"
#include "uwdiff/denoiser/unet.hpp"
#include "uwdiff/diffusion/sampler.hpp"
#include "uwdiff/diffusion/schedule.hpp"

namespace uwdiff {

struct EnhanceConfig {
    SamplerConfig sampler;
    uint64_t seed = 0;
};

// Restores one degraded image by sampling the conditional model from pure
// noise, conditioned on the degraded input. Output is clamped to [0,1].
inline Image enhance_image(Denoiser& model, const Schedule& sched,
                           const Image& degraded, const EnhanceConfig& cfg) {
    const Tensor cond = degraded.to_tensor();
    const EpsFn eps_fn = [&](const Tensor& x, int t) {
        return model.predict_eps(x, cond,
                                 std::vector<int>(static_cast<size_t>(x.dim(0)), t));
    };
    Rng rng(splitmix64(cfg.seed ^ 0x656e68ULL));
    const Tensor out = sample(sched, eps_fn, cond.shape(), cfg.sampler, rng);
    return clamp01(Image::from_tensor(out));
}

}  // namespace uwdiff

#endif  // UWDIFF_GUIDANCE_ENHANCE_HPP_
