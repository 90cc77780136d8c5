#ifndef UWDIFF_GUIDANCE_FINETUNE_HPP_
#define UWDIFF_GUIDANCE_FINETUNE_HPP_

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "uwdiff/denoiser/train.hpp"
#include "uwdiff/guidance/guidance.hpp"

namespace uwdiff {

struct FinetuneConfig {
    int batch_size = 8;
    int epochs = 1;
    int t_stride = 50;  // steps per epoch = ceil(round(t_m * T) / t_stride)
    double lr = 1e-4;
    uint64_t seed = 0;
    bool augment = true;
    GuidanceConfig guidance;
};

struct EpochStats {
    int64_t steps;
    double mean_loss;
    double wallclock_s;
    double clip_wallclock_s;  // time spent inside classifier gradients
};

// Fine-tunes a pretrained noise predictor so the classifier steering term
// becomes part of the weights. The regression target per step is
//   eps + (1 - lambda) * sqrt(1 - abar_t) * mean_i clip(grad log p_uw_i),
// a constant with respect to the network, so plain sampling of the result
// moves along -grad log p_underwater (toward "natural"). Steps only draw
// t from the truncated window [1, round(t_m * T)]: the classifier signal
// above the window is noise-dominated, and shrinking the window shrinks
// the epoch in proportion.
class FinetuneTrainer {
  public:
    FinetuneTrainer(Denoiser& model, const Schedule& schedule,
                    std::vector<const ClipClassifier*> classifiers, FinetuneConfig cfg)
        : model_(model), sched_(schedule), classifiers_(std::move(classifiers)),
          cfg_(cfg), rng_(splitmix64(cfg.seed ^ 0x66696e65ULL)) {
        if (cfg_.guidance.enabled && classifiers_.empty())
            throw std::invalid_argument("guided fine-tuning needs classifiers");
        for (size_t i = 0; i < model_.param_count(); ++i)
            slots_.push_back(opt_.add_slot(model_.param(i).numel()));
    }

    int active_window() const { return sched_.step_of(cfg_.guidance.t_m); }

    int steps_per_epoch() const {
        return static_cast<int>(
            (active_window() + cfg_.t_stride - 1) / cfg_.t_stride);
    }

    // Runs all epochs; per-epoch stats appended to `stats`, drawn t values
    // (for distributional checks) to `t_log` when given.
    void run(const std::vector<ImagePair>& data, std::vector<EpochStats>* stats,
             std::vector<int>* t_log = nullptr) {
        if (data.empty()) throw std::invalid_argument("empty fine-tuning set");
        const int64_t h = data[0].reference.height();
        const int64_t w = data[0].reference.width();
        if (cfg_.augment && h != w)
            throw std::invalid_argument("rotation augmentation needs square images");

        const int spe = steps_per_epoch();
        const int64_t total = static_cast<int64_t>(spe) * cfg_.epochs;
        for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
            const auto e0 = std::chrono::steady_clock::now();
            double loss_acc = 0.0;
            double clip_secs = 0.0;
            for (int s = 0; s < spe; ++s) {
                loss_acc += train_step(data, h, w, total, &clip_secs, t_log);
            }
            if (stats) {
                const double secs =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - e0)
                        .count();
                stats->push_back({spe, loss_acc / spe, secs, clip_secs});
            }
        }
    }

  private:
    double train_step(const std::vector<ImagePair>& data, int64_t h, int64_t w,
                      int64_t total_steps, double* clip_secs, std::vector<int>* t_log) {
        const int B = cfg_.batch_size;
        const int n_m = active_window();
        Tensor x0({B, 3, h, w}), cond({B, 3, h, w});
        std::vector<int> steps(static_cast<size_t>(B));

        for (int b = 0; b < B; ++b) {
            const size_t idx = static_cast<size_t>(rng_.uniform_below(data.size()));
            int rot_k = 0;
            bool flip = false;
            if (cfg_.augment) {
                rot_k = static_cast<int>(rng_.uniform_below(4));
                flip = rng_.uniform_below(2) == 1;
            }
            const int t = draw_truncated_step(rng_, n_m);
            steps[static_cast<size_t>(b)] = t;
            if (t_log) t_log->push_back(t);

            Image ref = data[idx].reference;
            Image deg = data[idx].degraded;
            if (rot_k != 0) {
                ref = rot90(ref, rot_k);
                deg = rot90(deg, rot_k);
            }
            if (flip) {
                ref = hflip(ref);
                deg = hflip(deg);
            }
            std::copy(ref.vec().begin(), ref.vec().end(), x0.data() + b * 3 * h * w);
            std::copy(deg.vec().begin(), deg.vec().end(), cond.data() + b * 3 * h * w);
        }

        Tensor eps(x0.shape()), xt(x0.shape());
        for (int b = 0; b < B; ++b) {
            const double ab = sched_.alpha_bar(steps[static_cast<size_t>(b)]);
            const double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
            double* xp = xt.data() + b * 3 * h * w;
            const double* x0p = x0.data() + b * 3 * h * w;
            double* ep = eps.data() + b * 3 * h * w;
            for (int64_t i = 0; i < 3 * h * w; ++i) {
                ep[i] = rng_.normal();
                xp[i] = sa * x0p[i] + sb * ep[i];
            }
        }

        // Regression target: eps plus the (detached) steering term. The
        // term differs per sample because t differs per sample.
        Tensor target = eps;
        if (cfg_.guidance.enabled) {
            const auto c0 = std::chrono::steady_clock::now();
            for (int b = 0; b < B; ++b) {
                Tensor xb({1, 3, h, w});
                std::copy(xt.data() + b * 3 * h * w, xt.data() + (b + 1) * 3 * h * w,
                          xb.data());
                const Tensor term = guidance_term(sched_, classifiers_, xb,
                                                  steps[static_cast<size_t>(b)],
                                                  cfg_.guidance);
                double* tp = target.data() + b * 3 * h * w;
                for (int64_t i = 0; i < 3 * h * w; ++i) tp[i] += term[i];
            }
            *clip_secs += std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - c0)
                              .count();
        }

        Tape tape;
        const Var pred = model_.forward(tape, xt, cond, steps);
        const Var loss = tape.mse(pred, target);
        tape.backward(loss);

        const double lr = linear_decay_lr(cfg_.lr, step_index_, total_steps);
        opt_.begin_step();
        const std::vector<Var>& vars = model_.bound_vars();
        for (size_t i = 0; i < model_.param_count(); ++i)
            opt_.update(slots_[i], model_.param(i), tape.grad(vars[i]), lr);
        ++step_index_;
        return tape.val(loss)[0];
    }

    Denoiser& model_;
    const Schedule& sched_;
    std::vector<const ClipClassifier*> classifiers_;
    FinetuneConfig cfg_;
    Rng rng_;
    Adam opt_;
    std::vector<int> slots_;
    int64_t step_index_ = 0;
};

}  // namespace uwdiff

#endif  // UWDIFF_GUIDANCE_FINETUNE_HPP_
