#include "brt/nfsp/matrix_game.hpp"

#include <algorithm>
#include <cmath>

#include "brt/errors.hpp"
#include "brt/nfsp/agent.hpp"

namespace brt::nfsp {

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    if (p.size() != q.size()) throw ShapeError("distributions differ in length");
    return 0.5 * (p - q).cwiseAbs().sum();
}

MatrixGameResult train_matrix_nfsp(const Eigen::MatrixXd& row_payoff,
                                   const MatrixGameConfig& cfg) {
    if (row_payoff.rows() < 2 || row_payoff.cols() < 2)
        throw ShapeError("payoff matrix needs at least two actions per player");
    if (cfg.steps < 1) throw ConfigError("step count must be positive");

    auto agent_config = [&](int actions, const char* tag) {
        NfspAgentConfig a;
        a.state_dim = 1;
        a.belief_dim = 0;
        a.actions = actions;
        a.q_hidden = {};    // constant state: a bias row per action suffices
        a.avg_hidden = {};
        a.lr_q = cfg.lr;
        a.lr_avg = cfg.lr;
        a.gamma = 0.0;      // one-step episodes never bootstrap
        a.batch_size = cfg.batch_size;
        a.circular_capacity = cfg.circular_capacity;
        a.reservoir_capacity = static_cast<size_t>(cfg.steps) + 1;  // keep every sample
        a.q_warmup = cfg.q_warmup;
        a.sync_period = cfg.sync_period;
        a.seed = RngStream::fnv1a(tag) ^ cfg.seed;
        return a;
    };

    NfspAgent row(agent_config(static_cast<int>(row_payoff.rows()), "matrix-row"));
    NfspAgent col(agent_config(static_cast<int>(row_payoff.cols()), "matrix-col"));

    const Eigen::VectorXd s = Eigen::VectorXd::Zero(1);
    const Eigen::VectorXd b(0);
    const double anneal_steps =
        std::max(1.0, cfg.anneal_fraction * static_cast<double>(cfg.steps));

    for (int64_t step = 0; step < cfg.steps; ++step) {
        const double frac = std::min(1.0, static_cast<double>(step) / anneal_steps);
        const double eps = cfg.eps_start + frac * (cfg.eps_end - cfg.eps_start);

        const auto di = row.act(s, b, cfg.eta, eps);
        const auto dj = col.act(s, b, cfg.eta, eps);
        const double r = row_payoff(di.action, dj.action);

        agents::Transition tr;
        tr.s = s;
        tr.b = b;
        tr.s2 = s;
        tr.b2 = b;
        tr.done = true;
        tr.action = di.action;
        tr.reward = r;
        row.observe(tr, di.best_response);
        tr.action = dj.action;
        tr.reward = -r;
        col.observe(tr, dj.best_response);

        row.update();
        col.update();
    }

    MatrixGameResult out;
    out.row_policy = row.avg_policy().action_probs(s, b);
    out.col_policy = col.avg_policy().action_probs(s, b);
    return out;
}

} // namespace brt::nfsp
