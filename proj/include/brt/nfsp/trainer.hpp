#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "brt/belief/qbn.hpp"
#include "brt/evalkit/metrics.hpp"
#include "brt/market_env/env.hpp"
#include "brt/nfsp/agent.hpp"

namespace brt::nfsp {

struct NfspConfig {
    double eta = 0.1;  // anticipatory mixing: probability of the best-response branch
    int64_t total_steps = 100000;
    double gamma = 0.99;

    // best-response exploration, annealed linearly over anneal_fraction of the run
    double eps_start = 0.10;
    double eps_end = 0.02;
    double anneal_fraction = 0.5;

    // threat model: strength handed to the env, exploration of the catalog
    double perturb_eps = 0.0;  // 0 leaves every observation bit-exact
    double adv_eps = 0.10;

    std::vector<int> q_hidden = {64, 64};
    std::vector<int> avg_hidden = {64, 64};
    std::vector<int> adv_hidden = {32};
    int qbn_hidden = 32;

    double lr_q = 1e-3;
    double lr_avg = 1e-3;
    double lr_qbn = 1e-3;
    double lr_adv = 1e-3;

    int batch_size = 32;
    size_t circular_capacity = 100000;
    size_t reservoir_capacity = 200000;
    size_t adversary_capacity = 100000;
    size_t qbn_buffer_capacity = 4096;

    int64_t q_warmup = 1000;
    int q_every = 1;
    int avg_every = 2;
    int qbn_every = 1;
    int adv_every = 4;
    int sync_period = 500;

    int64_t log_every = 100;
    int64_t eval_every = 0;  // 0 disables periodic greedy evaluation
    int eval_episodes = 1;

    uint64_t seed = 0;

    void validate() const;
};

struct LogRow {
    int64_t step = 0;
    double loss_q, loss_avg, loss_qbn, loss_adv, eval_return;
};

struct TrainReport {
    int64_t steps_run = 0;
    bool halted_nonfinite = false;
    std::string diagnostic;
};

// Orchestrates one trader against one macro adversary: each step the
// adversary re-aims the perturbation, the belief net reads the refreshed
// observation window, the trader acts from the anticipatory mixture, and
// the four networks train at their cadences. The average policy is the
// deployed strategy; the Q-net is kept for ablation.
class NfspTrainer {
public:
    NfspTrainer(const NfspConfig& cfg, const market_env::TradingEnv& env);

    // Runs cfg.total_steps steps (resetting episodes as they end). A
    // non-finite loss stops training early with the diagnostic filled in;
    // state is preserved for checkpointing.
    TrainReport train(market_env::TradingEnv& env);

    int64_t step() const { return agent_.steps(); }
    int64_t best_response_steps() const { return agent_.best_response_steps(); }

    NfspAgent& agent() { return agent_; }
    agents::QNetwork& qnet() { return agent_.qnet(); }
    agents::AvgPolicyNetwork& avg_policy() { return agent_.avg_policy(); }
    agents::AdversaryQNetwork& adversary() { return adversary_; }
    belief::QuantileBeliefNet& qbn() { return qbn_; }
    const agents::CircularBuffer<agents::AdversarySample>& adversary_buffer() const {
        return adv_buffer_;
    }

    const std::vector<LogRow>& log() const { return log_; }
    void write_log(std::ostream& os) const;  // step,loss_q,loss_avg,loss_qbn,loss_adv,eval_return

private:
    Eigen::VectorXd belief_vector(const market_env::Mat& window) const;
    double current_eps() const;
    bool train_one(market_env::TradingEnv& env, std::string& diagnostic);
    void append_log(double eval_return);

    struct QbnPair {
        market_env::Mat window;
        double target = 0.0;
    };

    NfspConfig cfg_;
    int state_dim_, macro_dim_, window_;
    NfspAgent agent_;
    agents::AdversaryQNetwork adversary_;
    belief::QuantileBeliefNet qbn_;
    agents::CircularBuffer<agents::AdversarySample> adv_buffer_;
    agents::CircularBuffer<QbnPair> qbn_pairs_;
    RngStream adv_rng_, episode_rng_, batch_rng_;
    double loss_qbn_, loss_adv_;
    std::vector<LogRow> log_;
};

// Greedy (argmax) rollouts of the average policy; metrics averaged across
// episodes, net curve and trade count from the final one. Beliefs come
// from the supplied net when it is trained, otherwise stay zero.
evalkit::BacktestReport evaluate_policy(const agents::AvgPolicyNetwork& policy,
                                        const belief::QuantileBeliefNet* qbn,
                                        market_env::TradingEnv& env, int episodes,
                                        uint64_t eval_seed = 9001);

} // namespace brt::nfsp
