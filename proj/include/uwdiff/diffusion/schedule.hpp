#ifndef UWDIFF_DIFFUSION_SCHEDULE_HPP_
#define UWDIFF_DIFFUSION_SCHEDULE_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwdiff/core/hash.hpp"

namespace uwdiff {

// Variance schedule for the forward noising process. Discrete steps are
// 1-based (t in 1..T); alpha_bar(0) == 1 identically, which makes the
// t=1 ancestral step and DDIM's jump-to-zero consistent without special
// cases. alpha_bar is accumulated in log space so that products over
// thousands of steps do not lose precision.
class Schedule {
  public:
    Schedule(std::string kind, int T, double beta_start, double beta_end)
        : kind_(std::move(kind)), T_(T), beta_start_(beta_start), beta_end_(beta_end) {
        if (kind_ != "linear")
            throw std::invalid_argument("unknown schedule kind: " + kind_);
        if (T_ < 1) throw std::invalid_argument("schedule needs T >= 1");
        if (!(beta_start_ > 0.0) || !(beta_end_ < 1.0) || beta_start_ > beta_end_)
            throw std::invalid_argument("need 0 < beta_start <= beta_end < 1");

        beta_.resize(static_cast<size_t>(T_));
        log_alpha_bar_.resize(static_cast<size_t>(T_));
        double log_acc = 0.0;
        for (int t = 1; t <= T_; ++t) {
            const double frac = T_ == 1 ? 0.0 : static_cast<double>(t - 1) / (T_ - 1);
            const double b = beta_start_ + (beta_end_ - beta_start_) * frac;
            beta_[t - 1] = b;
            log_acc += std::log1p(-b);
            log_alpha_bar_[t - 1] = log_acc;
        }
    }

    static Schedule linear(int T, double beta_start = 1e-6, double beta_end = 1e-2) {
        return Schedule("linear", T, beta_start, beta_end);
    }

    const std::string& kind() const { return kind_; }
    int T() const { return T_; }
    double beta_start() const { return beta_start_; }
    double beta_end() const { return beta_end_; }

    double beta(int t) const { return beta_.at(static_cast<size_t>(t - 1)); }
    double alpha(int t) const { return 1.0 - beta(t); }

    double alpha_bar(int t) const {
        if (t == 0) return 1.0;
        return std::exp(log_alpha_bar_.at(static_cast<size_t>(t - 1)));
    }

    // Posterior variance of q(x_{t-1} | x_t, x_0).
    double beta_tilde(int t) const {
        return (1.0 - alpha_bar(t - 1)) / (1.0 - alpha_bar(t)) * beta(t);
    }

    // Continuous time in [0,1] to a discrete step; 0 maps to step 1 so a
    // truncation fraction never yields an empty range.
    int step_of(double t_continuous) const {
        int n = static_cast<int>(std::llround(t_continuous * T_));
        if (n < 1) n = 1;
        if (n > T_) n = T_;
        return n;
    }

    uint64_t hash() const {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%s|%d|%.17g|%.17g", kind_.c_str(), T_,
                      beta_start_, beta_end_);
        return fnv1a64(buf, std::char_traits<char>::length(buf));
    }

  private:
    std::string kind_;
    int T_;
    double beta_start_, beta_end_;
    std::vector<double> beta_;
    std::vector<double> log_alpha_bar_;
};

}  // namespace uwdiff

#endif  // UWDIFF_DIFFUSION_SCHEDULE_HPP_
