#pragma once

#include <iosfwd>
#include <vector>

#include "brt/nn/graph.hpp"
#include "brt/nn/layers.hpp"
#include "brt/nn/optim.hpp"
#include "brt/rng.hpp"

namespace brt::agents {

constexpr int kActionCount = 3;

struct Transition {
    Eigen::VectorXd s, b;    // state and belief at decision time
    int action = 0;
    double reward = 0.0;
    Eigen::VectorXd s2, b2;  // successor state and belief
    bool done = false;
};

struct PolicySample {
    Eigen::VectorXd s, b;
    int action = 0;
};

struct AdversarySample {
    Eigen::VectorXd s;
    int pert_index = 0;
    double trader_reward = 0.0;
};

// Lowest index wins ties.
int argmax_index(const Eigen::VectorXd& values);

struct QNetConfig {
    int state_dim = 0;
    int belief_dim = 0;
    int actions = kActionCount;  // matrix-game harnesses shrink this to 2
    std::vector<int> hidden = {64, 64};
    double lr = 1e-3;
    int sync_period = 500;
    uint64_t seed = 0;

    void validate() const;
};

// Belief-conditioned action-value net with a periodically synced target
// copy. belief_dim = 0 gives the belief-free variant used by the DQN
// baseline.
class QNetwork {
public:
    explicit QNetwork(const QNetConfig& cfg);

    const QNetConfig& config() const { return cfg_; }
    nn::ParamSet& params() { return ps_; }
    nn::ParamSet& target_params() { return target_ps_; }
    long updates() const { return updates_; }
    void set_lr(double lr) { opt_.set_lr(lr); }

    Eigen::VectorXd q_values(const Eigen::VectorXd& s, const Eigen::VectorXd& b) const;
    Eigen::VectorXd target_q_values(const Eigen::VectorXd& s, const Eigen::VectorXd& b) const;
    int greedy_action(const Eigen::VectorXd& s, const Eigen::VectorXd& b) const;
    int act_epsilon_greedy(const Eigen::VectorXd& s, const Eigen::VectorXd& b,
                           double eps_explore, RngStream& rng) const;

    // Mean squared TD error of the batch with the target-network bootstrap
    // (dropped on terminal steps). Backpropagates when asked; gradients are
    // not zeroed first.
    double td_batch_loss(const std::vector<const Transition*>& batch, double gamma,
                         bool want_grad);
    // One optimizer step; syncs the target copy every sync_period updates.
    double td_update(const std::vector<const Transition*>& batch, double gamma);

    void save(std::ostream& os) const;
    static QNetwork load(std::istream& is);

private:
    Eigen::VectorXd forward_one(const nn::Mlp& net, const Eigen::VectorXd& s,
                                const Eigen::VectorXd& b) const;

    QNetConfig cfg_;
    nn::ParamSet ps_, target_ps_;
    nn::Mlp online_, target_;
    nn::Adam opt_;
    long updates_ = 0;
};

struct AvgPolicyConfig {
    int state_dim = 0;
    int belief_dim = 0;
    int actions = kActionCount;
    std::vector<int> hidden = {64, 64};
    double lr = 1e-3;
    uint64_t seed = 0;

    void validate() const;
};

// Time-averaged policy head. The zero-initialized output layer makes the
// fresh policy exactly uniform.
class AvgPolicyNetwork {
public:
    explicit AvgPolicyNetwork(const AvgPolicyConfig& cfg);

    const AvgPolicyConfig& config() const { return cfg_; }
    nn::ParamSet& params() { return ps_; }
    void set_lr(double lr) { opt_.set_lr(lr); }

    Eigen::VectorXd action_probs(const Eigen::VectorXd& s, const Eigen::VectorXd& b) const;
    int sample_action(const Eigen::VectorXd& s, const Eigen::VectorXd& b,
                      RngStream& rng) const;

    double ce_batch_loss(const std::vector<const PolicySample*>& batch, bool want_grad);
    double supervised_update(const std::vector<const PolicySample*>& batch);

    void save(std::ostream& os) const;
    static AvgPolicyNetwork load(std::istream& is);

private:
    AvgPolicyConfig cfg_;
    nn::ParamSet ps_;
    nn::Mlp net_;
    nn::Adam opt_;
};

struct AdversaryConfig {
    int state_dim = 0;
    int macro_dim = 0;
    std::vector<int> perturbable;  // empty = all macro indicators
    std::vector<int> hidden = {32};
    double lr = 1e-3;
    uint64_t seed = 0;

    void validate() const;
};

// Q-learner over a discrete perturbation catalog: the zero direction plus
// +-1 on each perturbable indicator. Its reward is the negated trader
// reward, so greedy play minimizes the trader's value.
class AdversaryQNetwork {
public:
    explicit AdversaryQNetwork(const AdversaryConfig& cfg);

    const AdversaryConfig& config() const { return cfg_; }
    nn::ParamSet& params() { return ps_; }
    int catalog_size() const { return static_cast<int>(catalog_.size()); }
    const Eigen::VectorXd& alpha(int index) const { return catalog_.at(index); }
    void set_lr(double lr) { opt_.set_lr(lr); }

    Eigen::VectorXd q_values(const Eigen::VectorXd& s) const;
    int greedy_index(const Eigen::VectorXd& s) const;
    int act_epsilon_greedy(const Eigen::VectorXd& s, double eps_explore, RngStream& rng) const;

    double batch_loss(const std::vector<const AdversarySample*>& batch, bool want_grad);
    double update(const std::vector<const AdversarySample*>& batch);

    void save(std::ostream& os) const;
    static AdversaryQNetwork load(std::istream& is);

private:
    AdversaryConfig cfg_;
    std::vector<Eigen::VectorXd> catalog_;
    nn::ParamSet ps_;
    nn::Mlp net_;
    nn::Adam opt_;
};

} // namespace brt::agents
