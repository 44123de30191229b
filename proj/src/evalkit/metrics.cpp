#include "brt/evalkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "brt/errors.hpp"

namespace brt::evalkit {

double arr(const std::vector<double>& net_values, int trading_days) {
    if (net_values.size() < 2) throw ShapeError("arr: need at least two net values");
    if (trading_days < 1) throw ShapeError("arr: trading_days must be positive");
    double v0 = net_values.front();
    double vt = net_values.back();
    if (v0 <= 0.0) throw ShapeError("arr: initial value must be positive");
    return (vt - v0) / v0 * kTradingDaysPerYear / static_cast<double>(trading_days);
}

double sharpe(const std::vector<double>& returns, bool annualize) {
    if (returns.size() < 2) throw ShapeError("sharpe: need at least two returns");
    double n = static_cast<double>(returns.size());
    double mean = 0.0;
    for (double r : returns) mean += r;
    mean /= n;
    double ss = 0.0;
    for (double r : returns) ss += (r - mean) * (r - mean);
    double sd = std::sqrt(ss / (n - 1.0));
    if (sd == 0.0) throw DegenerateSeriesError("sharpe: zero return volatility");
    double sr = mean / sd;
    return annualize ? sr * std::sqrt(kTradingDaysPerYear) : sr;
}

double max_drawdown(const std::vector<double>& net_values) {
    if (net_values.empty()) throw ShapeError("max_drawdown: empty series");
    double peak = net_values.front();
    if (peak <= 0.0) throw ShapeError("max_drawdown: values must be positive");
    double worst = 0.0;
    for (double v : net_values) {
        if (v <= 0.0) throw ShapeError("max_drawdown: values must be positive");
        peak = std::max(peak, v);
        worst = std::max(worst, (peak - v) / peak);
    }
    return worst;
}

std::vector<double> returns_from_net_values(const std::vector<double>& net_values) {
    if (net_values.size() < 2)
        throw ShapeError("returns_from_net_values: need at least two net values");
    std::vector<double> out;
    out.reserve(net_values.size() - 1);
    for (size_t t = 0; t + 1 < net_values.size(); ++t) {
        if (net_values[t] <= 0.0)
            throw ShapeError("returns_from_net_values: values must be positive");
        out.push_back(net_values[t + 1] / net_values[t] - 1.0);
    }
    return out;
}

BacktestReport summarize_backtest(const std::vector<double>& net_values, long trades) {
    BacktestReport rep;
    rep.net_values = net_values;
    rep.trades = trades;
    int days = static_cast<int>(net_values.size()) - 1;
    rep.arr = arr(net_values, days);
    try {
        rep.sr = sharpe(returns_from_net_values(net_values));
    } catch (const DegenerateSeriesError&) {
        // a flat curve has no volatility; NaN marks the ratio undefined
        rep.sr = std::numeric_limits<double>::quiet_NaN();
    }
    rep.mdd = max_drawdown(net_values);
    return rep;
}

} // namespace brt::evalkit
