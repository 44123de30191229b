#pragma once

#include <array>

#include "brt/dataio/types.hpp"

namespace brt::dataio {

struct FeatureRow {
    std::array<double, kFeatureCount> values{};
    std::array<bool, kFeatureCount> valid{};
};

// One bar to the five traded features: open-to-close return, close-to-close
// return, low/close, high/close, log dollar volume. Zero volume masks ldv;
// non-positive prices mask the whole row.
FeatureRow transform_features(const OhlcvRow& row, double prev_close);

// Stack per-ticker frames onto the union of their dates. Days a ticker did
// not trade are masked; the first bar of each ticker has cc masked (no
// previous close); malformed bars (OHLC ordering violated, non-positive
// prices) are masked and logged.
MarketTensor build_market_tensor(const std::vector<OhlcvFrame>& frames);

} // namespace brt::dataio
