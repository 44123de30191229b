#include "brt/nfsp/trainer.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "brt/errors.hpp"
#include "brt/logging.hpp"

namespace brt::nfsp {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

NfspAgentConfig agent_config(const NfspConfig& cfg, int state_dim) {
    NfspAgentConfig a;
    a.state_dim = state_dim;
    a.belief_dim = belief::kQuantiles;
    a.q_hidden = cfg.q_hidden;
    a.avg_hidden = cfg.avg_hidden;
    a.lr_q = cfg.lr_q;
    a.lr_avg = cfg.lr_avg;
    a.gamma = cfg.gamma;
    a.batch_size = cfg.batch_size;
    a.circular_capacity = cfg.circular_capacity;
    a.reservoir_capacity = cfg.reservoir_capacity;
    a.q_warmup = cfg.q_warmup;
    a.q_every = cfg.q_every;
    a.avg_every = cfg.avg_every;
    a.sync_period = cfg.sync_period;
    a.seed = cfg.seed;
    return a;
}

agents::AdversaryConfig adversary_config(const NfspConfig& cfg,
                                         const market_env::TradingEnv& env) {
    agents::AdversaryConfig a;
    a.state_dim = env.state_dim();
    a.macro_dim = env.macro_dim();
    a.perturbable = env.config().perturbable;
    a.hidden = cfg.adv_hidden;
    a.lr = cfg.lr_adv;
    a.seed = cfg.seed;
    return a;
}

belief::QbnConfig qbn_config(const NfspConfig& cfg, const market_env::TradingEnv& env) {
    belief::QbnConfig q;
    q.input_dim = dataio::kFeatureCount + env.macro_dim();
    q.window = env.config().window;
    q.hidden = cfg.qbn_hidden;
    q.lr = cfg.lr_qbn;
    q.seed = cfg.seed;
    return q;
}

const NfspConfig& validated(const NfspConfig& cfg) {
    cfg.validate();
    return cfg;
}

void csv_field(std::ostream& os, double v) {
    if (std::isfinite(v)) os << v;  // NaN renders as an empty field
}

} // namespace

void NfspConfig::validate() const {
    if (eta < 0.0 || eta > 1.0) throw ConfigError("anticipatory parameter must lie in [0, 1]");
    if (total_steps < 1) throw ConfigError("total step count must be positive");
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("discount must lie in [0, 1]");
    if (eps_start < 0.0 || eps_start > 1.0 || eps_end < 0.0 || eps_end > 1.0)
        throw ConfigError("exploration rates must lie in [0, 1]");
    if (anneal_fraction <= 0.0 || anneal_fraction > 1.0)
        throw ConfigError("anneal fraction must lie in (0, 1]");
    if (perturb_eps < 0.0) throw ConfigError("perturbation strength must be non-negative");
    if (adv_eps < 0.0 || adv_eps > 1.0)
        throw ConfigError("adversary exploration must lie in [0, 1]");
    if (batch_size < 1) throw ConfigError("batch size must be positive");
    if (q_warmup < 0) throw ConfigError("warmup must be non-negative");
    if (q_every < 1 || avg_every < 1 || qbn_every < 1 || adv_every < 1)
        throw ConfigError("update cadences must be positive");
    if (log_every < 1) throw ConfigError("log cadence must be positive");
    if (eval_every < 0) throw ConfigError("eval cadence must be non-negative");
    if (eval_episodes < 1) throw ConfigError("eval episode count must be positive");
}

NfspTrainer::NfspTrainer(const NfspConfig& cfg, const market_env::TradingEnv& env)
    : cfg_(validated(cfg)),
      state_dim_(env.state_dim()),
      macro_dim_(env.macro_dim()),
      window_(env.config().window),
      agent_(agent_config(cfg_, state_dim_)),
      adversary_(adversary_config(cfg_, env)),
      qbn_(qbn_config(cfg_, env)),
      adv_buffer_(cfg_.adversary_capacity),
      qbn_pairs_(cfg_.qbn_buffer_capacity),
      adv_rng_(cfg_.seed, "nfsp-adv-act"),
      episode_rng_(cfg_.seed, "nfsp-episodes"),
      batch_rng_(cfg_.seed, "nfsp-trainer-batch"),
      loss_qbn_(kNan),
      loss_adv_(kNan) {
    if (window_ < 5)
        throw ConfigError("env window too short for the trailing belief target");
}

Eigen::VectorXd NfspTrainer::belief_vector(const market_env::Mat& window) const {
    if (!qbn_.trained()) return Eigen::VectorXd::Zero(belief::kQuantiles);
    return qbn_.infer(window).q;
}

double NfspTrainer::current_eps() const {
    const double anneal_steps =
        std::max(1.0, cfg_.anneal_fraction * static_cast<double>(cfg_.total_steps));
    const double frac =
        std::min(1.0, static_cast<double>(agent_.steps()) / anneal_steps);
    return cfg_.eps_start + frac * (cfg_.eps_end - cfg_.eps_start);
}

bool NfspTrainer::train_one(market_env::TradingEnv& env, std::string& diagnostic) {
    // (1) the adversary re-aims the perturbation for this step
    const Eigen::VectorXd s_adv = env.current_state();
    const int adv_idx = adversary_.act_epsilon_greedy(s_adv, cfg_.adv_eps, adv_rng_);
    env.set_perturbation(adversary_.alpha(adv_idx), cfg_.perturb_eps);

    // (2) belief over the refreshed observation
    const market_env::Mat win = env.observation_window();
    const Eigen::VectorXd s = env.current_state();
    const Eigen::VectorXd bel = belief_vector(win);
    // the realized-return column's trailing mean is the belief target
    const auto cc = win.col(1);
    const std::vector<double> rets(cc.data(), cc.data() + cc.size());
    qbn_pairs_.push({win, belief::belief_target(rets, static_cast<int>(rets.size()) - 1)});

    // (3) anticipatory mixture picks the acting branch
    const auto decision = agent_.act(s, bel, cfg_.eta, current_eps());

    // (4) environment transition
    const auto res = env.step(static_cast<market_env::Action>(decision.action));

    // (5) buffer routing
    agents::Transition tr;
    tr.s = s;
    tr.b = bel;
    tr.action = decision.action;
    tr.reward = res.reward;
    tr.s2 = res.state;
    tr.b2 = belief_vector(env.observation_window());
    tr.done = res.done;
    agent_.observe(tr, decision.best_response);

    agents::AdversarySample as;
    as.s = s_adv;
    as.pert_index = adv_idx;
    as.trader_reward = res.reward;  // negated inside the adversary's loss
    adv_buffer_.push(as);

    // (6) cadenced updates; a failed update is logged, not fatal
    NfspAgent::UpdateOutcome outcome;
    try {
        outcome = agent_.update();
    } catch (const std::exception& e) {
        LogSink::global().record(std::string("trader update failed: ") + e.what());
    }
    const int64_t step = agent_.steps();

    bool qbn_ran = false, adv_ran = false;
    if (step % cfg_.qbn_every == 0 && !qbn_pairs_.empty()) {
        const auto batch =
            qbn_pairs_.sample(static_cast<size_t>(cfg_.batch_size), batch_rng_);
        std::vector<market_env::Mat> windows;
        Eigen::VectorXd targets(static_cast<int>(batch.size()));
        for (size_t i = 0; i < batch.size(); ++i) {
            windows.push_back(batch[i]->window);
            targets[static_cast<int>(i)] = batch[i]->target;
        }
        try {
            loss_qbn_ = qbn_.update(windows, targets);
            qbn_ran = true;
        } catch (const std::exception& e) {
            LogSink::global().record(std::string("belief update failed: ") + e.what());
        }
    }
    if (step % cfg_.adv_every == 0 &&
        adv_buffer_.size() >= static_cast<size_t>(cfg_.batch_size)) {
        try {
            loss_adv_ = adversary_.update(
                adv_buffer_.sample(static_cast<size_t>(cfg_.batch_size), batch_rng_));
            adv_ran = true;
        } catch (const std::exception& e) {
            LogSink::global().record(std::string("adversary update failed: ") + e.what());
        }
    }

    // non-finite losses stop the run with state intact
    auto bad = [](bool ran, double v) { return ran && !std::isfinite(v); };
    if (bad(outcome.q_ran, agent_.last_loss_q())) diagnostic = "loss_q";
    else if (bad(outcome.avg_ran, agent_.last_loss_avg())) diagnostic = "loss_avg";
    else if (bad(qbn_ran, loss_qbn_)) diagnostic = "loss_qbn";
    else if (bad(adv_ran, loss_adv_)) diagnostic = "loss_adv";
    if (!diagnostic.empty()) {
        diagnostic += " became non-finite at step " + std::to_string(step);
        return false;
    }

    if (res.done) env.reset(episode_rng_.raw());
    return true;
}

void NfspTrainer::append_log(double eval_return) {
    LogRow row;
    row.step = agent_.steps();
    row.loss_q = agent_.last_loss_q();
    row.loss_avg = agent_.last_loss_avg();
    row.loss_qbn = loss_qbn_;
    row.loss_adv = loss_adv_;
    row.eval_return = eval_return;
    log_.push_back(row);
}

TrainReport NfspTrainer::train(market_env::TradingEnv& env) {
    if (env.state_dim() != state_dim_ || env.macro_dim() != macro_dim_ ||
        env.config().window != window_)
        throw ConfigError("env does not match the dimensions the trainer was built for");

    TrainReport report;
    env.reset(episode_rng_.raw());
    for (int64_t i = 0; i < cfg_.total_steps; ++i) {
        std::string diagnostic;
        const bool ok = train_one(env, diagnostic);
        report.steps_run = agent_.steps();
        if (!ok) {
            report.halted_nonfinite = true;
            report.diagnostic = diagnostic;
            append_log(kNan);
            return report;
        }

        double eval_return = kNan;
        if (cfg_.eval_every > 0 && agent_.steps() % cfg_.eval_every == 0) {
            market_env::TradingEnv probe(env);
            const auto rep = evaluate_policy(agent_.avg_policy(),
                                             qbn_.trained() ? &qbn_ : nullptr, probe,
                                             cfg_.eval_episodes, cfg_.seed ^ 0x9e3779b9ull);
            eval_return = rep.net_values.back() - 1.0;
        }
        if (agent_.steps() % cfg_.log_every == 0 || !std::isnan(eval_return))
            append_log(eval_return);
    }
    return report;
}

void NfspTrainer::write_log(std::ostream& os) const {
    os << "step,loss_q,loss_avg,loss_qbn,loss_adv,eval_return\n";
    std::ostringstream line;
    line.precision(17);
    for (const auto& row : log_) {
        line.str("");
        line << row.step << ',';
        csv_field(line, row.loss_q);
        line << ',';
        csv_field(line, row.loss_avg);
        line << ',';
        csv_field(line, row.loss_qbn);
        line << ',';
        csv_field(line, row.loss_adv);
        line << ',';
        csv_field(line, row.eval_return);
        os << line.str() << '\n';
    }
}

evalkit::BacktestReport evaluate_policy(const agents::AvgPolicyNetwork& policy,
                                        const belief::QuantileBeliefNet* qbn,
                                        market_env::TradingEnv& env, int episodes,
                                        uint64_t eval_seed) {
    if (policy.config().state_dim != env.state_dim())
        throw ConfigError("policy was trained for a different environment shape");
    if (policy.config().belief_dim != 0 &&
        policy.config().belief_dim != belief::kQuantiles)
        throw ConfigError("policy belief width is not the quantile count");
    if (episodes < 1) throw ConfigError("episode count must be positive");

    const bool use_belief = policy.config().belief_dim == belief::kQuantiles;
    const bool have_qbn = qbn != nullptr && qbn->trained();

    double arr_sum = 0.0, sr_sum = 0.0, mdd_sum = 0.0;
    evalkit::BacktestReport last;
    for (int k = 0; k < episodes; ++k) {
        env.reset(eval_seed + static_cast<uint64_t>(k));
        std::vector<double> net_values = {1.0};
        while (!env.done()) {
            Eigen::VectorXd b(0);
            if (use_belief)
                b = have_qbn ? qbn->infer(env.observation_window()).q
                             : Eigen::VectorXd::Zero(belief::kQuantiles);
            const int a = agents::argmax_index(policy.action_probs(env.current_state(), b));
            env.step(static_cast<market_env::Action>(a));
            net_values.push_back(env.net_value());
        }
        long trades = 0;
        double prev_pos = 0.0;
        for (const auto& rec : env.trade_log()) {
            if (rec.position != prev_pos) ++trades;
            prev_pos = rec.position;
        }
        last = evalkit::summarize_backtest(net_values, trades);
        arr_sum += last.arr;
        sr_sum += last.sr;
        mdd_sum += last.mdd;
    }
    last.arr = arr_sum / episodes;
    last.sr = sr_sum / episodes;
    last.mdd = mdd_sum / episodes;
    return last;
}

} // namespace brt::nfsp
