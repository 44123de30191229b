#include "brt/agents/baselines.hpp"

#include <algorithm>

namespace brt::agents {

namespace {

const DqnConfig& validated(const DqnConfig& cfg) {
    cfg.validate();
    return cfg;
}

EpisodeResult play_out(market_env::TradingEnv& env, const PolicyFn& policy,
                       Eigen::VectorXd state) {
    EpisodeResult out;
    out.net_values.push_back(1.0);
    while (!env.done()) {
        const auto res = env.step(policy(state));
        out.rewards.push_back(res.reward);
        out.net_values.push_back(env.net_value());
        out.total_reward += res.reward;
        state = res.state;
    }
    double prev_pos = 0.0;
    for (const auto& rec : env.trade_log()) {
        if (rec.position != prev_pos) ++out.trades;
        prev_pos = rec.position;
    }
    return out;
}

} // namespace

EpisodeResult run_episode(market_env::TradingEnv& env, const PolicyFn& policy) {
    return play_out(env, policy, env.reset());
}

EpisodeResult run_episode(market_env::TradingEnv& env, const PolicyFn& policy,
                          uint64_t episode_seed) {
    return play_out(env, policy, env.reset(episode_seed));
}

evalkit::BacktestReport buy_and_hold(market_env::TradingEnv& env) {
    const auto episode =
        run_episode(env, [](const Eigen::VectorXd&) { return market_env::Action::Long; });
    return evalkit::summarize_backtest(episode.net_values, episode.trades);
}

void DqnConfig::validate() const {
    qnet.validate();
    if (qnet.belief_dim != 0)
        throw ConfigError("the DQN baseline is belief-free; belief_dim must be 0");
    if (batch_size < 1) throw ConfigError("batch size must be positive");
    if (warmup < batch_size) throw ConfigError("warmup must cover at least one batch");
    if (eps_start < 0.0 || eps_start > 1.0 || eps_end < 0.0 || eps_end > 1.0)
        throw ConfigError("exploration rates must lie in [0, 1]");
    if (anneal_fraction <= 0.0 || anneal_fraction > 1.0)
        throw ConfigError("anneal fraction must lie in (0, 1]");
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("discount must lie in [0, 1]");
}

DqnBaseline::DqnBaseline(const DqnConfig& cfg)
    : cfg_(validated(cfg)), q_(cfg.qnet), buffer_(cfg.buffer_capacity),
      rng_(cfg.seed, "dqn-train") {}

void DqnBaseline::train(market_env::TradingEnv& env, int steps) {
    if (steps < 1) throw ConfigError("training step count must be positive");
    const Eigen::VectorXd no_belief(0);
    Eigen::VectorXd s = env.reset(episodes_);
    const double anneal_steps = std::max(1.0, cfg_.anneal_fraction * steps);

    for (int step = 0; step < steps; ++step) {
        const double frac = std::min(1.0, step / anneal_steps);
        const double eps = cfg_.eps_start + (cfg_.eps_end - cfg_.eps_start) * frac;

        const int a = q_.act_epsilon_greedy(s, no_belief, eps, rng_);
        const auto res = env.step(static_cast<market_env::Action>(a));

        Transition tr;
        tr.s = s;
        tr.b = no_belief;
        tr.action = a;
        tr.reward = res.reward;
        tr.s2 = res.state;
        tr.b2 = no_belief;
        tr.done = res.done;
        buffer_.push(std::move(tr));

        s = res.state;
        if (res.done) s = env.reset(++episodes_);

        if (buffer_.size() >= static_cast<size_t>(cfg_.warmup))
            q_.td_update(buffer_.sample(static_cast<size_t>(cfg_.batch_size), rng_),
                         cfg_.gamma);
    }
}

int DqnBaseline::greedy_action(const Eigen::VectorXd& s) const {
    return q_.greedy_action(s, Eigen::VectorXd(0));
}

PolicyFn DqnBaseline::greedy_policy() const {
    return [this](const Eigen::VectorXd& s) {
        return static_cast<market_env::Action>(greedy_action(s));
    };
}

} // namespace brt::agents
