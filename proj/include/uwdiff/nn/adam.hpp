#ifndef UWDIFF_NN_ADAM_HPP_
#define UWDIFF_NN_ADAM_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "uwdiff/core/tensor.hpp"

namespace uwdiff {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. The learning rate is passed per call so the
// caller owns the decay policy.
class Adam {
  public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    // Registers a parameter tensor and returns its slot index.
    int add_slot(int64_t numel) {
        m_.emplace_back(static_cast<size_t>(numel), 0.0);
        v_.emplace_back(static_cast<size_t>(numel), 0.0);
        return static_cast<int>(m_.size() - 1);
    }

    void begin_step() { ++t_; }

    void update(int slot, Tensor& param, const Tensor& grad, double lr) {
        std::vector<double>& m = m_[static_cast<size_t>(slot)];
        std::vector<double>& v = v_[static_cast<size_t>(slot)];
        if (param.numel() != static_cast<int64_t>(m.size()) || !param.same_shape(grad))
            throw std::invalid_argument("adam slot/param shape mismatch");
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (int64_t i = 0; i < param.numel(); ++i) {
            const size_t j = static_cast<size_t>(i);
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * grad[i];
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            param[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }

    int64_t step_count() const { return t_; }

  private:
    AdamConfig cfg_;
    int64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

// Linear decay from lr0 at step 0 to zero at total_steps.
inline double linear_decay_lr(double lr0, int64_t step, int64_t total_steps) {
    if (total_steps <= 0) return lr0;
    double f = 1.0 - static_cast<double>(step) / static_cast<double>(total_steps);
    if (f < 0.0) f = 0.0;
    return lr0 * f;
}

}  // namespace uwdiff

#endif  // UWDIFF_NN_ADAM_HPP_
