#include "brt/market_env/env.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "brt/logging.hpp"

namespace brt::market_env {

namespace {

constexpr double kMinBarReturn = -0.95;  // floor on generated daily returns
constexpr double kLdvClamp = 30.0;       // keeps exp(ldv) finite

double mean_of(const double* x, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += x[i];
    return s / n;
}

} // namespace

const char* action_name(Action a) {
    switch (a) {
        case Action::Long: return "Long";
        case Action::Short: return "Short";
        case Action::Flat: return "Flat";
    }
    return "?";
}

double position_of(Action a) {
    switch (a) {
        case Action::Long: return 1.0;
        case Action::Short: return -1.0;
        case Action::Flat: return 0.0;
    }
    return 0.0;
}

Eigen::VectorXd compute_indicators(const std::vector<double>& closes,
                                   const std::vector<double>& volumes) {
    const int n = static_cast<int>(closes.size());
    if (n < kMinIndicatorWindow)
        throw ShapeError("indicator window needs at least " +
                         std::to_string(kMinIndicatorWindow) + " bars, got " +
                         std::to_string(n));
    if (volumes.size() != closes.size())
        throw ShapeError("closes and volumes must have equal length");

    const double last = closes[n - 1];
    Eigen::VectorXd out(kIndicatorCount);
    out[0] = closes[n - 1] / closes[n - 2] - 1.0;
    out[1] = closes[n - 1] / closes[n - 6] - 1.0;
    out[2] = closes[n - 1] / closes[0] - 1.0;
    out[3] = mean_of(closes.data() + n - 5, 5) / last - 1.0;
    out[4] = mean_of(closes.data(), n) / last - 1.0;

    double rm = 0.0;
    std::vector<double> rets(n - 1);
    for (int i = 1; i < n; ++i) {
        rets[i - 1] = closes[i] / closes[i - 1] - 1.0;
        rm += rets[i - 1];
    }
    rm /= (n - 1);
    double rv = 0.0;
    for (double r : rets) rv += (r - rm) * (r - rm);
    out[5] = std::sqrt(rv / (n - 2));

    const double vm = mean_of(volumes.data(), n);
    double vv = 0.0;
    for (double v : volumes) vv += (v - vm) * (v - vm);
    const double vs = std::sqrt(vv / (n - 1));
    out[6] = vs > 0.0 ? (volumes[n - 1] - vm) / vs : 0.0;
    return out;
}

void EnvConfig::validate(int instruments, int macro_dim) const {
    if (window < kMinIndicatorWindow)
        throw ConfigError("env window must be at least " +
                          std::to_string(kMinIndicatorWindow));
    if (instrument < 0 || instrument >= instruments)
        throw ConfigError("instrument index " + std::to_string(instrument) +
                          " out of range for " + std::to_string(instruments) +
                          " instruments");
    if (fee < 0.0) throw ConfigError("fee must be non-negative");
    if (horizon < 1) throw ConfigError("horizon must be positive");
    for (int k : perturbable)
        if (k < 0 || k >= macro_dim)
            throw ConfigError("perturbable macro index " + std::to_string(k) +
                              " out of range");
}

TradingEnv::TradingEnv(const dataio::Dataset& ds, const dataio::SplitSpec& splits,
                       int split_id, const EnvConfig& cfg)
    : cfg_(cfg) {
    init_from_dataset(ds, splits, split_id);
}

TradingEnv::TradingEnv(const dataio::Dataset& ds, const dataio::SplitSpec& splits,
                       int split_id, const EnvConfig& cfg,
                       std::shared_ptr<const genmodel::MarketGenerator> generator,
                       uint64_t seed)
    : cfg_(cfg), generator_(std::move(generator)), generative_(true), seed_(seed) {
    if (!generator_)
        throw NotFittedError("generative backend needs a trained generator checkpoint");
    if (generator_->phase() < 2)
        throw NotFittedError("generator checkpoint has not completed pretraining");
    init_from_dataset(ds, splits, split_id);
    const auto& gcfg = generator_->config();
    if (gcfg.window != cfg_.window)
        throw ConfigError("env window " + std::to_string(cfg_.window) +
                          " does not match generator window " + std::to_string(gcfg.window));
    if (gcfg.series_dim() != static_cast<int>(base_features_.cols()) ||
        gcfg.macro_dim != macro_dim())
        throw ShapeError("generator checkpoint dimensions do not match the dataset");
}

void TradingEnv::init_from_dataset(const dataio::Dataset& ds, const dataio::SplitSpec& splits,
                                   int split_id) {
    const auto& mkt = ds.market;
    mkt.check_shapes();
    if (mkt.F() != dataio::kFeatureCount)
        throw ShapeError("market tensor must carry the standard feature set");
    if (ds.macro.T() != mkt.T())
        throw MisalignedPanelsError("market and macro panels differ in length");
    if (split_id < 0 || split_id > 2)
        throw ConfigError("split id must be 0 (train), 1 (valid) or 2 (test)");
    cfg_.validate(mkt.I(), ds.macro.M());
    splits.validate();

    const int T = mkt.T();
    const int I = mkt.I();
    const int F = mkt.F();
    dates_ = mkt.dates;
    instruments_ = I;

    base_features_ = Mat::Zero(T, I * F);
    for (int i = 0; i < I; ++i)
        for (int t = 0; t < T; ++t)
            for (int f = 0; f < F; ++f)
                if (mkt.mask[i](t, f)) base_features_(t, i * F + f) = mkt.values[i](t, f);

    macro_ = Mat::Zero(T, ds.macro.M());
    for (int t = 0; t < T; ++t)
        for (int m = 0; m < ds.macro.M(); ++m)
            if (ds.macro.mask(t, m)) macro_(t, m) = ds.macro.values(t, m);
    macro_scale_ = ds.macro.scale;
    if (macro_scale_.size() != ds.macro.M())
        throw ShapeError("macro panel is missing its per-indicator scale");

    split_begin_ = T;
    split_end_ = -1;
    for (int t = 0; t < T; ++t) {
        if (splits.split_of(dates_[t]) == split_id) {
            split_begin_ = std::min(split_begin_, t);
            split_end_ = std::max(split_end_, t);
        }
    }
    alpha_ = Eigen::VectorXd::Zero(ds.macro.M());
}

void TradingEnv::rebuild_chain(int from_row) {
    const int T = static_cast<int>(dates_.size());
    const int cc = cfg_.instrument * dataio::kFeatureCount + 1;
    const int ldv = cfg_.instrument * dataio::kFeatureCount + 4;
    closes_.resize(T);
    volumes_.resize(T);
    for (int t = from_row; t < T; ++t) {
        const double prev = t == 0 ? 1.0 : closes_[t - 1];
        closes_[t] = t == 0 ? 1.0 : prev * (1.0 + features_(t, cc));
        const double lv = features_(t, ldv);
        volumes_[t] = lv != 0.0 ? std::exp(std::clamp(lv, -kLdvClamp, kLdvClamp)) / closes_[t]
                                : (t > 0 ? volumes_[t - 1] : 1.0);
    }
}

Eigen::VectorXd TradingEnv::reset() { return reset(seed_); }

Eigen::VectorXd TradingEnv::reset(uint64_t episode_seed) {
    if (split_begin_ > split_end_)
        throw NoDataError("split holds no trading days");

    features_ = base_features_;
    rebuild_chain(0);
    const int L = cfg_.window;
    t_ = std::max(split_begin_, generative_ ? 2 * L - 1 : L - 1);
    steps_ = 0;
    net_value_ = 1.0;
    prev_pos_ = 0.0;
    done_ = false;
    log_.clear();

    if (generative_) {
        rollout_rng_ = RngStream(episode_seed, "env-rollout");
        frontier_ = t_;
        if (!ensure_rows_through(t_ + 1))
            throw NoDataError("split too short for a generative rollout");
    } else {
        frontier_ = split_end_;
        if (t_ >= split_end_)
            throw NoDataError("split too short for the indicator window");
    }
    return assemble_state();
}

bool TradingEnv::ensure_rows_through(int row) {
    const int L = cfg_.window;
    const int cc = cfg_.instrument * dataio::kFeatureCount + 1;
    while (frontier_ < row) {
        const int e = frontier_;
        if (e + L > split_end_ || e - L + 1 < 0) return false;
        Mat macro_window = macro_.middleRows(e - L + 1, 2 * L);
        if (cfg_.perturb_conditioning && eps_ > 0.0)
            macro_window = apply_perturbation(macro_window, alpha_, eps_);
        const Mat x_hist = features_.middleRows(e - L + 1, L);
        const Mat block = generator_->sample_window(macro_window, x_hist, rollout_rng_);
        features_.middleRows(e + 1, L) = block;
        for (int j = e + 1; j <= e + L; ++j)
            features_(j, cc) = std::max(features_(j, cc), kMinBarReturn);
        rebuild_chain(e + 1);
        frontier_ = e + L;
    }
    return true;
}

Eigen::VectorXd TradingEnv::assemble_state() const {
    const int L = cfg_.window;
    std::vector<double> c(closes_.begin() + (t_ - L + 1), closes_.begin() + t_ + 1);
    std::vector<double> v(volumes_.begin() + (t_ - L + 1), volumes_.begin() + t_ + 1);
    const Eigen::VectorXd ind = compute_indicators(c, v);

    Eigen::VectorXd s(state_dim());
    s.head(kIndicatorCount) = ind;
    s.segment(kIndicatorCount, dataio::kFeatureCount) =
        features_.row(t_).segment(cfg_.instrument * dataio::kFeatureCount,
                                  dataio::kFeatureCount);
    Mat m_row = macro_.row(t_);
    if (cfg_.perturb_observation && eps_ > 0.0)
        m_row = apply_perturbation(m_row, alpha_, eps_);
    s.segment(kIndicatorCount + dataio::kFeatureCount, macro_dim()) = m_row.row(0);
    s[state_dim() - 1] = prev_pos_;
    return s;
}

StepResult TradingEnv::step(Action a) {
    if (done_) throw EpisodeOverError("episode is over; call reset()");

    const int cc = cfg_.instrument * dataio::kFeatureCount + 1;
    const double p = position_of(a);
    const double ret_next = features_(t_ + 1, cc);
    const double r = p * ret_next - cfg_.fee * (p != prev_pos_ ? 1.0 : 0.0);
    net_value_ *= 1.0 + r;
    log_.push_back({dates_[t_], a, p, r, net_value_});

    prev_pos_ = p;
    t_ += 1;
    steps_ += 1;

    if (generative_) {
        done_ = steps_ >= cfg_.horizon || !ensure_rows_through(t_ + 1);
    } else {
        done_ = t_ >= split_end_;
    }
    return {assemble_state(), r, done_};
}

void TradingEnv::set_perturbation(const Eigen::VectorXd& alpha, double eps) {
    if (alpha.size() != macro_dim())
        throw ShapeError("perturbation direction must have one entry per macro indicator");
    if (eps < 0.0) throw ConfigError("perturbation budget must be non-negative");
    alpha_ = clip_alpha(alpha);
    eps_ = eps;
}

void TradingEnv::clear_perturbation() {
    alpha_.setZero();
    eps_ = 0.0;
}

Eigen::VectorXd TradingEnv::clip_alpha(const Eigen::VectorXd& alpha) const {
    if (alpha.lpNorm<Eigen::Infinity>() <= 1.0) return alpha;
    LogSink::global().record("perturbation direction clipped to unit sup-norm (was " +
                             std::to_string(alpha.lpNorm<Eigen::Infinity>()) + ")");
    return alpha.cwiseMax(-1.0).cwiseMin(1.0);
}

Mat TradingEnv::apply_perturbation(const Mat& macro_window, const Eigen::VectorXd& alpha,
                                   double eps) const {
    if (macro_window.cols() != macro_dim())
        throw ShapeError("macro window has " + std::to_string(macro_window.cols()) +
                         " columns, expected " + std::to_string(macro_dim()));
    if (alpha.size() != macro_dim())
        throw ShapeError("perturbation direction must have one entry per macro indicator");
    if (eps < 0.0) throw ConfigError("perturbation budget must be non-negative");
    if (eps == 0.0) return macro_window;

    const Eigen::VectorXd a = clip_alpha(alpha);
    Mat out = macro_window;
    if (cfg_.perturbable.empty()) {
        for (int m = 0; m < macro_dim(); ++m)
            out.col(m).array() += eps * a[m] * macro_scale_[m];
    } else {
        for (int m : cfg_.perturbable)
            out.col(m).array() += eps * a[m] * macro_scale_[m];
    }
    return out;
}

Mat TradingEnv::observation_window() const {
    if (done_ && log_.empty())
        throw EpisodeOverError("no active episode; call reset()");
    const int L = cfg_.window;
    const int F = dataio::kFeatureCount;
    Mat out(L, F + macro_dim());
    out.leftCols(F) = features_.middleRows(t_ - L + 1, L).middleCols(cfg_.instrument * F, F);
    Mat m_rows = macro_.middleRows(t_ - L + 1, L);
    if (cfg_.perturb_observation && eps_ > 0.0)
        m_rows = apply_perturbation(m_rows, alpha_, eps_);
    out.rightCols(macro_dim()) = m_rows;
    return out;
}

Eigen::VectorXd TradingEnv::current_state() const {
    if (done_ && log_.empty())
        throw EpisodeOverError("no active episode; call reset()");
    return assemble_state();
}

Date TradingEnv::current_date() const { return dates_[t_]; }

void TradingEnv::write_trade_log(std::ostream& os) const {
    os << "date,action,position,reward,net_value\n";
    std::ostringstream line;
    line.precision(17);
    for (const auto& rec : log_) {
        line.str("");
        line << rec.date.iso() << ',' << action_name(rec.action) << ',' << rec.position
             << ',' << rec.reward << ',' << rec.net_value;
        os << line.str() << '\n';
    }
}

} // namespace brt::market_env
