#pragma once

#include <optional>
#include <vector>

#include "brt/dataio/types.hpp"

namespace brt::evalkit {

// Pearson correlation over the valid intersection of two series.
// Returns nullopt when fewer than 3 points overlap or either side is
// constant on the overlap.
std::optional<double> masked_pearson(const std::vector<double>& x,
                                     const std::vector<bool>& x_valid,
                                     const std::vector<double>& y,
                                     const std::vector<bool>& y_valid);

// Pearson on fully-valid series.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

// Autocorrelation at one lag, standard biased estimator normalized by the
// lag-0 sum of squares; acf(x, 0) == 1 for any non-constant series.
double acf(const std::vector<double>& x, int lag);

struct CorrelationDiffs {
    double feature_macro = 0.0;
    double inter_instrument = 0.0;
    double inter_feature = 0.0;
    long skipped_pairs = 0;
};

// Mean absolute gaps between real and synthetic correlation structure:
// every (instrument-feature, macro indicator) pair, every instrument pair
// per feature, every feature pair per instrument. Pairs with fewer than
// 3 overlapping valid points on either side are skipped and counted.
CorrelationDiffs correlation_diffs(const dataio::MarketTensor& real,
                                   const dataio::MacroPanel& macro,
                                   const dataio::MarketTensor& synth);

struct StylizedFactDiffs {
    double acf_returns = 0.0;
    double acf_abs_returns = 0.0;
    double leverage = 0.0;
};

// Mean over lags 1..max_lag of the absolute gaps in: return ACF,
// absolute-return ACF, and the leverage curve corr(r_t, |r_{t+lag}|).
StylizedFactDiffs stylized_fact_diffs(const std::vector<double>& real_returns,
                                      const std::vector<double>& synth_returns,
                                      int max_lag = 10);

struct GenEvalReport {
    CorrelationDiffs corr;
    StylizedFactDiffs facts;
};

} // namespace brt::evalkit
