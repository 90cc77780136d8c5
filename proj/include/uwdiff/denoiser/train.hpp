#ifndef UWDIFF_DENOISER_TRAIN_HPP_
#define UWDIFF_DENOISER_TRAIN_HPP_

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "uwdiff/core/image.hpp"
#include "uwdiff/core/rng.hpp"
#include "uwdiff/denoiser/unet.hpp"
#include "uwdiff/diffusion/process.hpp"
#include "uwdiff/diffusion/schedule.hpp"
#include "uwdiff/nn/adam.hpp"

namespace uwdiff {

// A training example: clean target image and its degraded counterpart
// used as conditioning.
struct ImagePair {
    Image reference;
    Image degraded;
};

struct TrainConfig {
    int batch_size = 8;
    int steps = 2000;
    double lr = 1e-4;       // linearly decayed to zero over `steps`
    uint64_t seed = 0;
    bool augment = true;    // k*90deg rotations + horizontal flips
    int log_every = 50;
};

struct TrainLogRow {
    int64_t step;
    double loss;
    double lr;
    double wallclock_s;
};

// Draw order per step is fixed and documented so runs are reproducible:
// for each batch slot (index, rot_k, flip, t), then the noise tensor
// elementwise in batch order.
class DenoiserTrainer {
  public:
    DenoiserTrainer(Denoiser& model, const Schedule& schedule, TrainConfig cfg)
        : model_(model), sched_(schedule), cfg_(cfg), rng_(splitmix64(cfg.seed ^ 0x7261696e21ULL)) {
        for (size_t i = 0; i < model_.param_count(); ++i)
            slots_.push_back(opt_.add_slot(model_.param(i).numel()));
    }

    // Runs cfg.steps optimization steps over `data`. Appends per-step rows
    // to `log` (every row; callers thin as needed).
    void run(const std::vector<ImagePair>& data, std::vector<TrainLogRow>* log) {
        if (data.empty()) throw std::invalid_argument("empty training set");
        const int64_t h = data[0].reference.height();
        const int64_t w = data[0].reference.width();
        for (const ImagePair& p : data)
            if (p.reference.height() != h || p.reference.width() != w ||
                p.degraded.height() != h || p.degraded.width() != w)
                throw std::invalid_argument("training images must share one size");
        if (cfg_.augment && h != w)
            throw std::invalid_argument("rotation augmentation needs square images");

        const auto start = std::chrono::steady_clock::now();
        for (int step = 0; step < cfg_.steps; ++step) {
            const double loss = train_step(data, h, w);
            const double lr = last_lr_;
            if (log) {
                const double secs = std::chrono::duration<double>(
                                        std::chrono::steady_clock::now() - start)
                                        .count();
                log->push_back({step, loss, lr, secs});
            }
        }
    }

    // One optimization step; returns the batch loss.
    double train_step(const std::vector<ImagePair>& data, int64_t h, int64_t w) {
        const int B = cfg_.batch_size;
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
            steps[static_cast<size_t>(b)] = 1 + static_cast<int>(rng_.uniform_below(
                                                    static_cast<uint64_t>(sched_.T())));
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

        Tape tape;
        const Var pred = model_.forward(tape, xt, cond, steps);
        const Var loss = tape.mse(pred, eps);
        tape.backward(loss);

        last_lr_ = linear_decay_lr(cfg_.lr, step_index_, cfg_.steps);
        opt_.begin_step();
        const std::vector<Var>& vars = model_.bound_vars();
        for (size_t i = 0; i < model_.param_count(); ++i)
            opt_.update(slots_[i], model_.param(i), tape.grad(vars[i]), last_lr_);
        ++step_index_;
        return tape.val(loss)[0];
    }

    int64_t step_index() const { return step_index_; }

  private:
    Denoiser& model_;
    const Schedule& sched_;
    TrainConfig cfg_;
    Rng rng_;
    Adam opt_;
    std::vector<int> slots_;
    int64_t step_index_ = 0;
    double last_lr_ = 0.0;
};

}  // namespace uwdiff

#endif  // UWDIFF_DENOISER_TRAIN_HPP_
