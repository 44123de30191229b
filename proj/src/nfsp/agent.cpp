#include "brt/nfsp/agent.hpp"

#include <limits>

#include "brt/errors.hpp"

namespace brt::nfsp {

void NfspAgentConfig::validate() const {
    if (state_dim < 1) throw ConfigError("state dimension must be positive");
    if (belief_dim < 0) throw ConfigError("belief dimension must be non-negative");
    if (actions < 2) throw ConfigError("need at least two actions");
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("discount must lie in [0, 1]");
    if (batch_size < 1) throw ConfigError("batch size must be positive");
    if (q_warmup < 0) throw ConfigError("warmup must be non-negative");
    if (q_every < 1 || avg_every < 1) throw ConfigError("update cadence must be positive");
}

namespace {

const NfspAgentConfig& validated(const NfspAgentConfig& cfg) {
    cfg.validate();
    return cfg;
}

agents::QNetConfig q_config(const NfspAgentConfig& cfg) {
    agents::QNetConfig q;
    q.state_dim = cfg.state_dim;
    q.belief_dim = cfg.belief_dim;
    q.actions = cfg.actions;
    q.hidden = cfg.q_hidden;
    q.lr = cfg.lr_q;
    q.sync_period = cfg.sync_period;
    q.seed = cfg.seed;
    return q;
}

agents::AvgPolicyConfig avg_config(const NfspAgentConfig& cfg) {
    agents::AvgPolicyConfig a;
    a.state_dim = cfg.state_dim;
    a.belief_dim = cfg.belief_dim;
    a.actions = cfg.actions;
    a.hidden = cfg.avg_hidden;
    a.lr = cfg.lr_avg;
    a.seed = cfg.seed;
    return a;
}

} // namespace

NfspAgent::NfspAgent(const NfspAgentConfig& cfg)
    : cfg_(validated(cfg)),
      q_(q_config(cfg_)),
      avg_(avg_config(cfg_)),
      circular_(cfg_.circular_capacity),
      reservoir_(cfg_.reservoir_capacity),
      act_rng_(cfg_.seed, "nfsp-act"),
      buffer_rng_(cfg_.seed, "nfsp-reservoir"),
      batch_rng_(cfg_.seed, "nfsp-batch"),
      loss_q_(std::numeric_limits<double>::quiet_NaN()),
      loss_avg_(std::numeric_limits<double>::quiet_NaN()) {}

NfspAgent::Decision NfspAgent::act(const Eigen::VectorXd& s, const Eigen::VectorXd& b,
                                   double eta, double eps_explore) {
    if (eta < 0.0 || eta > 1.0)
        throw ConfigError("anticipatory parameter must lie in [0, 1]");
    Decision d;
    d.best_response = act_rng_.uniform() < eta;
    d.action = d.best_response ? q_.act_epsilon_greedy(s, b, eps_explore, act_rng_)
                               : avg_.sample_action(s, b, act_rng_);
    return d;
}

void NfspAgent::observe(const agents::Transition& tr, bool best_response) {
    circular_.push(tr);
    if (best_response) {
        agents::PolicySample ps;
        ps.s = tr.s;
        ps.b = tr.b;
        ps.action = tr.action;
        reservoir_.insert(ps, buffer_rng_);
        ++br_steps_;
    }
}

NfspAgent::UpdateOutcome NfspAgent::update() {
    ++steps_;
    UpdateOutcome out;
    const size_t batch = static_cast<size_t>(cfg_.batch_size);
    if (steps_ > cfg_.q_warmup && steps_ % cfg_.q_every == 0 && circular_.size() >= batch) {
        loss_q_ = q_.td_update(circular_.sample(batch, batch_rng_), cfg_.gamma);
        out.q_ran = true;
    }
    if (steps_ % cfg_.avg_every == 0 && reservoir_.size() >= batch) {
        loss_avg_ = avg_.supervised_update(reservoir_.sample(batch, batch_rng_));
        out.avg_ran = true;
    }
    return out;
}

} // namespace brt::nfsp
