#pragma once

#include "brt/dataio/types.hpp"

namespace brt::dataio {

struct SelectionResult {
    std::vector<int> indices;        // retained columns, in candidate order
    std::vector<std::string> names;
    long dropped_constant = 0;
};

// Two-stage Pearson screen over macro candidates: keep |corr(candidate,
// target)| > tau_corr, then admit survivors in candidate order only while
// their max |corr| against already-admitted ones stays below tau_red.
// Constant candidates are dropped with a warning.
SelectionResult select_features(const MacroPanel& candidates,
                                const std::vector<double>& target,
                                const std::vector<bool>& target_valid,
                                double tau_corr = 0.05, double tau_red = 0.95);

} // namespace brt::dataio
