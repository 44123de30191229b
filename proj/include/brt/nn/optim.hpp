#pragma once

#include <cmath>

#include "brt/nn/graph.hpp"

namespace brt::nn {

// Adam with bias correction. One optimizer owns one ParamSet's schedule.
class Adam {
public:
    explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(ParamSet& ps) {
        ++t_;
        double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (auto& p : ps.items()) {
            p->adam_m = beta1_ * p->adam_m + (1.0 - beta1_) * p->grad;
            p->adam_v =
                (beta2_ * p->adam_v.array() + (1.0 - beta2_) * p->grad.array().square())
                    .matrix();
            p->value.array() -=
                lr_ * (p->adam_m.array() / bc1) /
                ((p->adam_v.array() / bc2).sqrt() + eps_);
        }
    }

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }
    long step_count() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
};

} // namespace brt::nn
