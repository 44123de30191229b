#pragma once

#include <vector>

namespace brt::evalkit {

struct WilcoxonResult {
    double p_value = 1.0;
    double w_statistic = 0.0; // sum of positive-difference ranks
    int n_used = 0;           // pairs remaining after zero removal
    bool exact = true;
};

// One-sided (greater) signed-rank test on paired differences. Zeros are
// dropped, tied absolute differences get midranks. Exact tail probability
// by enumeration of sign assignments for n <= exact_cutoff, normal
// approximation with tie correction and continuity correction above.
WilcoxonResult wilcoxon_directional_full(const std::vector<double>& diffs,
                                         int exact_cutoff = 25);

double wilcoxon_directional(const std::vector<double>& diffs);

} // namespace brt::evalkit
