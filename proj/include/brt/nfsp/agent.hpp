#pragma once

#include <cstdint>

#include "brt/agents/buffers.hpp"
#include "brt/agents/nets.hpp"

namespace brt::nfsp {

struct NfspAgentConfig {
    int state_dim = 0;
    int belief_dim = 0;
    int actions = agents::kActionCount;
    std::vector<int> q_hidden = {64, 64};
    std::vector<int> avg_hidden = {64, 64};
    double lr_q = 1e-3;
    double lr_avg = 1e-3;
    double gamma = 0.99;
    int batch_size = 32;
    size_t circular_capacity = 100000;
    size_t reservoir_capacity = 200000;
    int64_t q_warmup = 1000;   // steps before the first Q update
    int q_every = 1;
    int avg_every = 2;
    int sync_period = 500;
    uint64_t seed = 0;

    void validate() const;
};

// One fictitious-self-play learner: a best-response Q-net fed from a
// circular buffer of recent play, and an average-policy net fed from a
// reservoir of its own best-response actions. The anticipatory parameter
// picks the acting branch each step; only best-response actions enter the
// reservoir, so the average policy tracks the time-averaged best response.
class NfspAgent {
public:
    explicit NfspAgent(const NfspAgentConfig& cfg);

    struct Decision {
        int action = 0;
        bool best_response = false;
    };

    // With probability eta act epsilon-greedily from the Q-net, otherwise
    // sample the average policy.
    Decision act(const Eigen::VectorXd& s, const Eigen::VectorXd& b, double eta,
                 double eps_explore);

    // Buffer routing: every transition enters the circular buffer; the
    // (s, b, a) tuple enters the reservoir only on the best-response branch.
    void observe(const agents::Transition& tr, bool best_response);

    struct UpdateOutcome {
        bool q_ran = false;
        bool avg_ran = false;
    };

    // Cadenced updates; call exactly once per environment step. Losses are
    // NaN until the corresponding update has run at least once.
    UpdateOutcome update();

    int64_t steps() const { return steps_; }
    int64_t best_response_steps() const { return br_steps_; }
    double last_loss_q() const { return loss_q_; }
    double last_loss_avg() const { return loss_avg_; }

    const NfspAgentConfig& config() const { return cfg_; }
    agents::QNetwork& qnet() { return q_; }
    agents::AvgPolicyNetwork& avg_policy() { return avg_; }
    const agents::CircularBuffer<agents::Transition>& circular() const { return circular_; }
    const agents::ReservoirBuffer<agents::PolicySample>& reservoir() const {
        return reservoir_;
    }

private:
    NfspAgentConfig cfg_;
    agents::QNetwork q_;
    agents::AvgPolicyNetwork avg_;
    agents::CircularBuffer<agents::Transition> circular_;
    agents::ReservoirBuffer<agents::PolicySample> reservoir_;
    RngStream act_rng_, buffer_rng_, batch_rng_;
    int64_t steps_ = 0, br_steps_ = 0;
    double loss_q_, loss_avg_;
};

} // namespace brt::nfsp
