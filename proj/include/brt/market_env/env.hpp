#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "brt/dataio/dataset.hpp"
#include "brt/genmodel/generator.hpp"
#include "brt/rng.hpp"

namespace brt::market_env {

using dataio::Mat;

enum class Action { Long = 0, Short = 1, Flat = 2 };

const char* action_name(Action a);
double position_of(Action a);

constexpr int kIndicatorCount = 7;
constexpr int kMinIndicatorWindow = 6;

// Scale-free technical indicators over a trailing bar window: one-day,
// five-day, and full-window returns, five-day and full-window moving-average
// gaps relative to the last close, the std of daily returns (ddof 1), and
// the last day's volume z-score. Multiplying all closes (or volumes) by a
// constant leaves every value unchanged, so they are safe to compute off a
// normalized price chain. Throws ShapeError below kMinIndicatorWindow bars.
Eigen::VectorXd compute_indicators(const std::vector<double>& closes,
                                   const std::vector<double>& volumes);

struct EnvConfig {
    int window = 21;               // indicator and conditioning window L
    int instrument = 0;            // which instrument the agent trades
    double fee = 0.001;            // charged when the position changes
    int horizon = 252;             // step cap for generative episodes
    std::vector<int> perturbable;  // macro indices open to the adversary; empty = all
    bool perturb_observation = true;
    bool perturb_conditioning = true;

    void validate(int instruments, int macro_dim) const;
};

struct StepResult {
    Eigen::VectorXd state;
    double reward = 0.0;
    bool done = false;
};

struct TradeRecord {
    Date date;
    Action action = Action::Flat;
    double position = 0.0;
    double reward = 0.0;
    double net_value = 1.0;
};

// Daily trading MDP over one instrument. State layout:
//   [indicators (7) | bar features (5) | macro row (M) | previous position (1)].
// Rewards are r_t = p_t * ret_{t+1} - fee * 1[position changed], and net
// value compounds multiplicatively from 1. The historical backend replays
// one split; the generative backend extends the price path autoregressively
// from a trained generator, block by block, under the split's macro series.
class TradingEnv {
public:
    TradingEnv(const dataio::Dataset& ds, const dataio::SplitSpec& splits, int split_id,
               const EnvConfig& cfg);
    TradingEnv(const dataio::Dataset& ds, const dataio::SplitSpec& splits, int split_id,
               const EnvConfig& cfg, std::shared_ptr<const genmodel::MarketGenerator> generator,
               uint64_t seed);

    Eigen::VectorXd reset();
    Eigen::VectorXd reset(uint64_t episode_seed);
    StepResult step(Action a);

    // Adversary's handle: alpha (one entry per macro indicator, sup-norm
    // clipped to 1 with a log line) and epsilon scale the next observations
    // and, for the generative backend, the next conditioning windows.
    void set_perturbation(const Eigen::VectorXd& alpha, double eps);
    void clear_perturbation();

    // M* = M + eps * alpha (.) training-split scale on the perturbable
    // subset; eps = 0 returns the input bit-exactly.
    Mat apply_perturbation(const Mat& macro_window, const Eigen::VectorXd& alpha,
                           double eps) const;

    // Trailing window for belief conditioning: the traded instrument's bar
    // features beside the (possibly perturbed) macro rows, L x (5 + M).
    Mat observation_window() const;

    // The state at the current row under the perturbation now in force; lets
    // an adversary change alpha and hand the trader a refreshed observation.
    Eigen::VectorXd current_state() const;

    const EnvConfig& config() const { return cfg_; }
    int state_dim() const { return kIndicatorCount + dataio::kFeatureCount + macro_dim() + 1; }
    int macro_dim() const { return static_cast<int>(macro_.cols()); }
    bool done() const { return done_; }
    double net_value() const { return net_value_; }
    int current_row() const { return t_; }
    Date current_date() const;
    const std::vector<TradeRecord>& trade_log() const { return log_; }
    void write_trade_log(std::ostream& os) const;

private:
    void init_from_dataset(const dataio::Dataset& ds, const dataio::SplitSpec& splits,
                           int split_id);
    void rebuild_chain(int from_row);
    bool ensure_rows_through(int row);
    Eigen::VectorXd assemble_state() const;
    Eigen::VectorXd clip_alpha(const Eigen::VectorXd& alpha) const;

    EnvConfig cfg_;
    std::shared_ptr<const genmodel::MarketGenerator> generator_;
    bool generative_ = false;
    uint64_t seed_ = 0;

    // immutable copies from the dataset
    std::vector<Date> dates_;
    Mat base_features_;  // T x (I*F), masked cells zeroed
    Mat macro_;          // T x M, masked cells zeroed
    Eigen::VectorXd macro_scale_;
    int instruments_ = 0;
    int split_begin_ = 0, split_end_ = -1;  // inclusive row range

    // episode state
    Mat features_;  // working copy; generative rollouts overwrite rows
    std::vector<double> closes_, volumes_;
    int t_ = 0;
    int frontier_ = 0;  // last row with usable bar data this episode
    int steps_ = 0;
    double net_value_ = 1.0;
    double prev_pos_ = 0.0;
    bool done_ = true;
    std::vector<TradeRecord> log_;
    RngStream rollout_rng_{0};

    Eigen::VectorXd alpha_;
    double eps_ = 0.0;
};

} // namespace brt::market_env
