#pragma once

#include <functional>
#include <vector>

#include "brt/agents/buffers.hpp"
#include "brt/agents/nets.hpp"
#include "brt/evalkit/metrics.hpp"
#include "brt/market_env/env.hpp"

namespace brt::agents {

struct EpisodeResult {
    std::vector<double> rewards;
    std::vector<double> net_values;  // leading 1.0, then one point per step
    long trades = 0;                 // position changes
    double total_reward = 0.0;
};

using PolicyFn = std::function<market_env::Action(const Eigen::VectorXd&)>;

// Resets the env (seeded overload for generative rollouts) and plays the
// policy to the end of the episode.
EpisodeResult run_episode(market_env::TradingEnv& env, const PolicyFn& policy);
EpisodeResult run_episode(market_env::TradingEnv& env, const PolicyFn& policy,
                          uint64_t episode_seed);

// Always-Long benchmark: one entry fee, then hold to the end of the split.
evalkit::BacktestReport buy_and_hold(market_env::TradingEnv& env);

struct DqnConfig {
    QNetConfig qnet;  // belief_dim must stay 0
    size_t buffer_capacity = 10000;
    int batch_size = 32;
    int warmup = 200;
    double eps_start = 1.0;
    double eps_end = 0.05;
    double anneal_fraction = 0.5;  // of total training steps
    double gamma = 0.99;
    uint64_t seed = 0;

    void validate() const;
};

// Belief-free Q-learner on the raw environment state; the plain control
// baseline the belief-conditioned agent is compared against.
class DqnBaseline {
public:
    explicit DqnBaseline(const DqnConfig& cfg);

    void train(market_env::TradingEnv& env, int steps);
    int greedy_action(const Eigen::VectorXd& s) const;
    PolicyFn greedy_policy() const;
    QNetwork& qnet() { return q_; }

private:
    DqnConfig cfg_;
    QNetwork q_;
    CircularBuffer<Transition> buffer_;
    RngStream rng_;
    uint64_t episodes_ = 0;
};

} // namespace brt::agents
