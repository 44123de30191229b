#pragma once

#include "brt/dataio/types.hpp"

namespace brt::dataio {

// Per-feature I x I correlation matrices between instruments, computed on
// rows up to and including train_end with pairwise-complete observations.
// Pairs with under 3 overlapping points or a constant side get correlation
// 0 (neutral weight).
std::vector<Mat> instrument_correlations(const MarketTensor& panel, Date train_end);

// Fills each missing (t, i, f) from instruments valid at (t, f), weighted
// by exp(corr). Entries with no valid donors stay missing. Donor values are
// the original observations only; imputed entries never feed each other.
MarketTensor impute_correlation_weighted(const MarketTensor& panel,
                                         const std::vector<Mat>& corr);

} // namespace brt::dataio
