#pragma once

#include <iosfwd>
#include <vector>

#include "brt/nn/graph.hpp"
#include "brt/nn/layers.hpp"
#include "brt/nn/optim.hpp"
#include "brt/rng.hpp"

namespace brt::belief {

using Mat = Eigen::MatrixXd;

constexpr int kQuantiles = 5;
const std::vector<double>& quantile_levels();  // {0.1, 0.25, 0.5, 0.75, 0.9}

struct Belief {
    Eigen::VectorXd q;  // one value per level, nondecreasing
};

// Trailing five-day mean of realized returns ending at index t; the
// regression target the belief head is trained against.
double belief_target(const std::vector<double>& returns, int t);

// Mean over levels of max(q_k (y - p_k), (q_k - 1)(y - p_k)).
double pinball_loss(const Eigen::VectorXd& pred, const std::vector<double>& levels,
                    double y);

struct QbnConfig {
    int input_dim = 0;  // columns of the observation window
    int window = 21;    // rows of the observation window
    int hidden = 32;
    double lr = 1e-3;
    uint64_t seed = 0;

    void validate() const;
};

// Quantile belief head: an LSTM over the trailing observation window, a
// normalization layer, and a linear map to the quantile levels. Training
// regresses raw head outputs with the pinball loss; inference sorts them
// so the reported belief never crosses.
class QuantileBeliefNet {
public:
    explicit QuantileBeliefNet(const QbnConfig& cfg);

    const QbnConfig& config() const { return cfg_; }
    bool trained() const { return updates_ > 0; }
    nn::ParamSet& params() { return ps_; }
    void set_lr(double lr) { opt_.set_lr(lr); }

    Belief infer(const Mat& window) const;

    // Mean pinball loss over the batch; backpropagates into the parameter
    // gradients when asked (without zeroing them first).
    double batch_loss(const std::vector<Mat>& windows, const Eigen::VectorXd& targets,
                      bool want_grad);

    // One optimizer step on the mean pinball loss over the batch; returns
    // the pre-step loss.
    double update(const std::vector<Mat>& windows, const Eigen::VectorXd& targets);

    // Raw (unsorted) quantile outputs for a batch of stacked windows; rows
    // of each element of `steps` hold one batch item's step.
    nn::Var forward(nn::Tape& t, const std::vector<nn::Var>& steps) const;

    void save(std::ostream& os) const;
    static QuantileBeliefNet load(std::istream& is);

private:
    QbnConfig cfg_;
    nn::ParamSet ps_;
    nn::Lstm lstm_;
    nn::LayerNorm norm_;
    nn::Linear head_;
    nn::Adam opt_;
    long updates_ = 0;
};

} // namespace brt::belief
