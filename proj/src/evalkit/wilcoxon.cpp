#include "brt/evalkit/wilcoxon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "brt/errors.hpp"

namespace brt::evalkit {

namespace {

// Midranks of |d|, scaled by 2 so ties land on integers.
std::vector<int> doubled_midranks(const std::vector<double>& abs_d) {
    int n = static_cast<int>(abs_d.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return abs_d[a] < abs_d[b]; });
    std::vector<int> doubled(n, 0);
    int pos = 0;
    while (pos < n) {
        int end = pos;
        while (end + 1 < n && abs_d[order[end + 1]] == abs_d[order[pos]]) ++end;
        // ranks pos+1 .. end+1 share the midrank; doubled midrank = pos+end+2
        int dr = pos + end + 2;
        for (int k = pos; k <= end; ++k) doubled[order[k]] = dr;
        pos = end + 1;
    }
    return doubled;
}

// P(W >= w_obs) under random signs, counted exactly via a subset-sum table
// over the doubled ranks. Equivalent to enumerating all 2^n assignments.
double exact_upper_tail(const std::vector<int>& doubled_ranks, long long doubled_w) {
    int total = std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), 0);
    std::vector<double> count(total + 1, 0.0);
    count[0] = 1.0;
    for (int r : doubled_ranks) {
        for (int s = total; s >= r; --s) count[s] += count[s - r];
    }
    double tail = 0.0;
    for (int s = total; s >= 0 && s >= doubled_w; --s) tail += count[s];
    double all = std::ldexp(1.0, static_cast<int>(doubled_ranks.size()));
    return tail / all;
}

double normal_upper_tail(const std::vector<int>& doubled_ranks, double w) {
    double n = static_cast<double>(doubled_ranks.size());
    double mu = n * (n + 1.0) / 4.0;
    double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    // tie correction: subtract sum(t^3 - t)/48 over tie groups
    std::vector<int> sorted = doubled_ranks;
    std::sort(sorted.begin(), sorted.end());
    size_t pos = 0;
    while (pos < sorted.size()) {
        size_t end = pos;
        while (end + 1 < sorted.size() && sorted[end + 1] == sorted[pos]) ++end;
        double t = static_cast<double>(end - pos + 1);
        var -= (t * t * t - t) / 48.0;
        pos = end + 1;
    }
    double z = (w - mu - 0.5) / std::sqrt(var);
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

} // namespace

WilcoxonResult wilcoxon_directional_full(const std::vector<double>& diffs,
                                         int exact_cutoff) {
    std::vector<double> nonzero;
    nonzero.reserve(diffs.size());
    for (double d : diffs)
        if (d != 0.0) nonzero.push_back(d);
    if (nonzero.empty())
        throw DegenerateSeriesError("wilcoxon: all paired differences are zero");

    std::vector<double> abs_d(nonzero.size());
    for (size_t i = 0; i < nonzero.size(); ++i) abs_d[i] = std::abs(nonzero[i]);
    std::vector<int> doubled = doubled_midranks(abs_d);

    long long doubled_w = 0;
    for (size_t i = 0; i < nonzero.size(); ++i)
        if (nonzero[i] > 0.0) doubled_w += doubled[i];

    WilcoxonResult res;
    res.n_used = static_cast<int>(nonzero.size());
    res.w_statistic = static_cast<double>(doubled_w) / 2.0;
    res.exact = res.n_used <= exact_cutoff;
    res.p_value = res.exact ? exact_upper_tail(doubled, doubled_w)
                            : normal_upper_tail(doubled, res.w_statistic);
    return res;
}

double wilcoxon_directional(const std::vector<double>& diffs) {
    return wilcoxon_directional_full(diffs).p_value;
}

} // namespace brt::evalkit
