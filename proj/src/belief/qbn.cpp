#include "brt/belief/qbn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "brt/errors.hpp"
#include "brt/nn/serialize.hpp"

namespace brt::belief {

namespace {
constexpr char kMagic[] = "BTQBN01\n";
}

const std::vector<double>& quantile_levels() {
    static const std::vector<double> levels = {0.1, 0.25, 0.5, 0.75, 0.9};
    return levels;
}

double belief_target(const std::vector<double>& returns, int t) {
    if (t < 4 || t >= static_cast<int>(returns.size()))
        throw ShapeError("belief target needs five realized returns ending at t");
    double s = 0.0;
    for (int j = t - 4; j <= t; ++j) s += returns[j];
    return s / 5.0;
}

double pinball_loss(const Eigen::VectorXd& pred, const std::vector<double>& levels,
                    double y) {
    if (pred.size() != static_cast<int>(levels.size()))
        throw ShapeError("one prediction per quantile level required");
    double total = 0.0;
    for (int k = 0; k < pred.size(); ++k) {
        const double d = y - pred[k];
        total += std::max(levels[k] * d, (levels[k] - 1.0) * d);
    }
    return total / static_cast<double>(pred.size());
}

void QbnConfig::validate() const {
    if (input_dim < 1) throw ConfigError("belief input dimension must be positive");
    if (window < 2) throw ConfigError("belief window must be at least 2");
    if (hidden < 1) throw ConfigError("belief hidden width must be positive");
    if (lr <= 0.0) throw ConfigError("belief learning rate must be positive");
}

QuantileBeliefNet::QuantileBeliefNet(const QbnConfig& cfg) : cfg_(cfg), opt_(cfg.lr) {
    cfg_.validate();
    RngStream rng(cfg_.seed, "qbn-init");
    lstm_ = nn::Lstm(ps_, "qbn.lstm", cfg_.input_dim, cfg_.hidden, rng);
    norm_ = nn::LayerNorm(ps_, "qbn.norm", cfg_.hidden, rng);
    head_ = nn::Linear(ps_, "qbn.head", cfg_.hidden, kQuantiles, rng);
    // a zero head keeps the initial belief unbiased at every level
    head_.W->value.setZero();
    head_.b->value.setZero();
}

nn::Var QuantileBeliefNet::forward(nn::Tape& t, const std::vector<nn::Var>& steps) const {
    nn::Var h = lstm_.last_hidden(t, steps);
    return head_.forward(t, norm_.forward(t, h));
}

Belief QuantileBeliefNet::infer(const Mat& window) const {
    if (updates_ == 0)
        throw NotFittedError("belief network has not been trained");
    if (window.rows() != cfg_.window || window.cols() != cfg_.input_dim)
        throw ShapeError("observation window must be " + std::to_string(cfg_.window) +
                         " x " + std::to_string(cfg_.input_dim));
    nn::Tape t;
    std::vector<nn::Var> steps;
    steps.reserve(cfg_.window);
    for (int j = 0; j < cfg_.window; ++j) steps.push_back(t.constant(window.row(j)));
    const Mat& raw = t.val(forward(t, steps));

    Belief b;
    b.q = raw.row(0).transpose();
    std::sort(b.q.data(), b.q.data() + b.q.size());
    return b;
}

double QuantileBeliefNet::batch_loss(const std::vector<Mat>& windows,
                                     const Eigen::VectorXd& targets, bool want_grad) {
    const int B = static_cast<int>(windows.size());
    if (B == 0) throw DegenerateBatchError("belief update needs a nonempty batch");
    if (targets.size() != B)
        throw ShapeError("one target per window required");
    for (const Mat& w : windows)
        if (w.rows() != cfg_.window || w.cols() != cfg_.input_dim)
            throw ShapeError("observation window shape mismatch in belief batch");

    nn::Tape t;
    std::vector<nn::Var> steps;
    steps.reserve(cfg_.window);
    for (int j = 0; j < cfg_.window; ++j) {
        Mat step(B, cfg_.input_dim);
        for (int b = 0; b < B; ++b) step.row(b) = windows[b].row(j);
        steps.push_back(t.constant(std::move(step)));
    }
    nn::Var pred = forward(t, steps);

    Mat level_row(1, kQuantiles), level_m1_row(1, kQuantiles);
    for (int k = 0; k < kQuantiles; ++k) {
        level_row(0, k) = quantile_levels()[k];
        level_m1_row(0, k) = quantile_levels()[k] - 1.0;
    }
    nn::Var diff = t.sub(t.rep_cols(t.constant(targets), kQuantiles), pred);
    nn::Var loss = t.mean(t.max_(t.mul_rowvec(diff, t.constant(level_row)),
                                 t.mul_rowvec(diff, t.constant(level_m1_row))));
    if (want_grad) t.backward(loss);
    return t.val(loss)(0, 0);
}

double QuantileBeliefNet::update(const std::vector<Mat>& windows,
                                 const Eigen::VectorXd& targets) {
    ps_.zero_grad();
    const double value = batch_loss(windows, targets, true);
    opt_.step(ps_);
    ++updates_;
    return value;
}

void QuantileBeliefNet::save(std::ostream& os) const {
    os.write(kMagic, sizeof(kMagic) - 1);
    nn::write_u32(os, static_cast<uint32_t>(cfg_.input_dim));
    nn::write_u32(os, static_cast<uint32_t>(cfg_.window));
    nn::write_u32(os, static_cast<uint32_t>(cfg_.hidden));
    nn::write_f64(os, cfg_.lr);
    nn::write_u64(os, cfg_.seed);
    nn::write_u64(os, static_cast<uint64_t>(updates_));
    nn::write_params(os, ps_);
}

QuantileBeliefNet QuantileBeliefNet::load(std::istream& is) {
    char magic[sizeof(kMagic) - 1];
    is.read(magic, sizeof(magic));
    if (!is || std::string(magic, sizeof(magic)) != std::string(kMagic, sizeof(magic)))
        throw ConfigError("not a belief network checkpoint");
    QbnConfig cfg;
    cfg.input_dim = static_cast<int>(nn::read_u32(is));
    cfg.window = static_cast<int>(nn::read_u32(is));
    cfg.hidden = static_cast<int>(nn::read_u32(is));
    cfg.lr = nn::read_f64(is);
    cfg.seed = nn::read_u64(is);
    const uint64_t updates = nn::read_u64(is);
    QuantileBeliefNet net(cfg);
    nn::read_params(is, net.ps_);
    net.updates_ = static_cast<long>(updates);
    return net;
}

} // namespace brt::belief
