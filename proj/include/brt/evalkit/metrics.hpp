#pragma once

#include <vector>

namespace brt::evalkit {

constexpr double kTradingDaysPerYear = 252.0;

// (V_T - V_0)/V_0 * C/T with C = 252 trading days.
double arr(const std::vector<double>& net_values, int trading_days);

// Sample mean over sample std (ddof = 1). Per-period by default; the
// annualize flag multiplies by sqrt(252).
double sharpe(const std::vector<double>& returns, bool annualize = false);

// Largest peak-to-trough loss as a fraction of the peak.
double max_drawdown(const std::vector<double>& net_values);

// Simple returns V_{t+1}/V_t - 1.
std::vector<double> returns_from_net_values(const std::vector<double>& net_values);

struct BacktestReport {
    double arr = 0.0;
    double sr = 0.0;
    double mdd = 0.0;
    std::vector<double> net_values;
    long trades = 0;
};

// Metric triplet over a net-value curve; trading_days = len - 1.
// A zero-volatility curve reports SR as NaN instead of throwing.
BacktestReport summarize_backtest(const std::vector<double>& net_values, long trades);

} // namespace brt::evalkit
