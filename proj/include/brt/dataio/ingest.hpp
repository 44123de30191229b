#pragma once

#include <string>

#include "brt/dataio/types.hpp"

namespace brt::dataio {

// One ticker's bars from a CSV with header date,open,high,low,close,volume.
OhlcvFrame read_ohlcv_csv(const std::string& path, const std::string& ticker);

// Raw macro readings from a CSV with header date,<indicator>...; empty
// cells are missing. Rows keep publication frequency (not yet trading-day
// aligned); scale is left unset.
MacroPanel read_macro_csv(const std::string& path);

// Forward-fill raw readings onto the market date axis: each trading day
// carries the most recent published value; days before the first reading
// stay masked.
MacroPanel align_macro(const MacroPanel& raw, const std::vector<Date>& market_dates);

// Per-indicator sample std over training rows (mask-aware). Indicators
// that are constant or near-empty on the training split are dropped with
// a warning, keeping the scale > 0 invariant.
MacroPanel compute_macro_scale(const MacroPanel& aligned, Date train_end);

} // namespace brt::dataio
