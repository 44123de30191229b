#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace brt::nfsp {

// Harness fixture: a two-player zero-sum matrix game played as a one-step
// MDP with a constant dummy state and no beliefs. Both players learn by
// fictitious self-play; their final average policies should approach the
// mixed Nash equilibrium.
struct MatrixGameConfig {
    int64_t steps = 100000;
    double eta = 0.1;
    double eps_start = 0.25;  // best-response exploration, annealed linearly
    double eps_end = 0.02;
    double anneal_fraction = 0.5;
    double lr = 5e-3;
    int batch_size = 64;
    size_t circular_capacity = 1000;  // recent play only, so Q tracks the opponent
    int64_t q_warmup = 200;
    int sync_period = 100;
    uint64_t seed = 0;
};

struct MatrixGameResult {
    Eigen::VectorXd row_policy;  // average-policy distribution of the row player
    Eigen::VectorXd col_policy;
};

// row_payoff(i, j) is the row player's reward; the column player receives
// its negation.
MatrixGameResult train_matrix_nfsp(const Eigen::MatrixXd& row_payoff,
                                   const MatrixGameConfig& cfg);

// Half the L1 distance between two distributions.
double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

} // namespace brt::nfsp
