#include "brt/evalkit/fidelity.hpp"

#include <algorithm>
#include <cmath>

#include "brt/logging.hpp"

namespace brt::evalkit {

namespace {

bool is_constant(const std::vector<double>& v) {
    auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    return *mn == *mx;
}

std::optional<double> pearson_points(const std::vector<double>& xs,
                                     const std::vector<double>& ys) {
    size_t n = xs.size();
    if (n < 3) return std::nullopt;
    if (is_constant(xs) || is_constant(ys)) return std::nullopt;
    double mx = 0, my = 0;
    for (size_t k = 0; k < n; ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, syy = 0, sxy = 0;
    for (size_t k = 0; k < n; ++k) {
        double dx = xs[k] - mx, dy = ys[k] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

// Accumulates |rho_real - rho_synth| over pairs, skipping undefined ones.
struct GapAccumulator {
    double sum = 0.0;
    long pairs = 0;
    long skipped = 0;

    void add(std::optional<double> real_rho, std::optional<double> synth_rho,
             const char* what) {
        if (!real_rho || !synth_rho) {
            ++skipped;
            LogSink::global().record(std::string("correlation_diffs: skipped ") + what +
                                     " pair (under 3 valid points or constant series)");
            return;
        }
        sum += std::abs(*real_rho - *synth_rho);
        ++pairs;
    }

    double mean() const { return pairs > 0 ? sum / static_cast<double>(pairs) : 0.0; }
};

} // namespace

std::optional<double> masked_pearson(const std::vector<double>& x,
                                     const std::vector<bool>& x_valid,
                                     const std::vector<double>& y,
                                     const std::vector<bool>& y_valid) {
    if (x.size() != y.size() || x.size() != x_valid.size() || y.size() != y_valid.size())
        throw ShapeError("masked_pearson: length mismatch");
    std::vector<double> xs, ys;
    xs.reserve(x.size());
    ys.reserve(y.size());
    for (size_t t = 0; t < x.size(); ++t) {
        if (x_valid[t] && y_valid[t]) {
            xs.push_back(x[t]);
            ys.push_back(y[t]);
        }
    }
    return pearson_points(xs, ys);
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ShapeError("pearson: length mismatch");
    return pearson_points(x, y);
}

double acf(const std::vector<double>& x, int lag) {
    int n = static_cast<int>(x.size());
    if (lag < 0 || lag >= n) throw ShapeError("acf: lag out of range");
    if (is_constant(x)) throw DegenerateSeriesError("acf: constant series");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double denom = 0.0;
    for (double v : x) denom += (v - mean) * (v - mean);
    if (denom == 0.0) throw DegenerateSeriesError("acf: constant series");
    double num = 0.0;
    for (int t = 0; t + lag < n; ++t) num += (x[t] - mean) * (x[t + lag] - mean);
    return num / denom;
}

CorrelationDiffs correlation_diffs(const dataio::MarketTensor& real,
                                   const dataio::MacroPanel& macro,
                                   const dataio::MarketTensor& synth) {
    real.check_shapes();
    synth.check_shapes();
    if (real.I() != synth.I() || real.F() != synth.F())
        throw ShapeError("correlation_diffs: instrument/feature sets must match");
    if (real.T() != macro.T())
        throw MisalignedPanelsError("correlation_diffs: macro panel length mismatch");

    int I = real.I(), F = real.F();

    auto grab = [](const dataio::MarketTensor& mt, int i, int f,
                   std::vector<double>& vals, std::vector<bool>& valid) {
        mt.series(i, f, vals, valid);
    };

    std::vector<double> a_vals, b_vals;
    std::vector<bool> a_valid, b_valid;

    GapAccumulator fm, ii, ff;

    // feature-macro: every (instrument, feature) series against every macro series
    std::vector<double> m_vals(macro.T());
    std::vector<bool> m_valid(macro.T());
    for (int i = 0; i < I; ++i) {
        for (int f = 0; f < F; ++f) {
            grab(real, i, f, a_vals, a_valid);
            grab(synth, i, f, b_vals, b_valid);
            for (int m = 0; m < macro.M(); ++m) {
                for (int t = 0; t < macro.T(); ++t) {
                    m_vals[t] = macro.values(t, m);
                    m_valid[t] = macro.mask(t, m);
                }
                fm.add(masked_pearson(a_vals, a_valid, m_vals, m_valid),
                       masked_pearson(b_vals, b_valid, m_vals, m_valid), "feature-macro");
            }
        }
    }

    // inter-instrument: per feature, every unordered instrument pair
    std::vector<double> a2_vals, b2_vals;
    std::vector<bool> a2_valid, b2_valid;
    for (int f = 0; f < F; ++f) {
        for (int i = 0; i < I; ++i) {
            for (int j = i + 1; j < I; ++j) {
                grab(real, i, f, a_vals, a_valid);
                grab(real, j, f, a2_vals, a2_valid);
                grab(synth, i, f, b_vals, b_valid);
                grab(synth, j, f, b2_vals, b2_valid);
                ii.add(masked_pearson(a_vals, a_valid, a2_vals, a2_valid),
                       masked_pearson(b_vals, b_valid, b2_vals, b2_valid),
                       "inter-instrument");
            }
        }
    }

    // inter-feature: per instrument, every unordered feature pair
    for (int i = 0; i < I; ++i) {
        for (int f = 0; f < F; ++f) {
            for (int g = f + 1; g < F; ++g) {
                grab(real, i, f, a_vals, a_valid);
                grab(real, i, g, a2_vals, a2_valid);
                grab(synth, i, f, b_vals, b_valid);
                grab(synth, i, g, b2_vals, b2_valid);
                ff.add(masked_pearson(a_vals, a_valid, a2_vals, a2_valid),
                       masked_pearson(b_vals, b_valid, b2_vals, b2_valid), "inter-feature");
            }
        }
    }

    CorrelationDiffs out;
    out.feature_macro = fm.mean();
    out.inter_instrument = ii.mean();
    out.inter_feature = ff.mean();
    out.skipped_pairs = fm.skipped + ii.skipped + ff.skipped;
    return out;
}

StylizedFactDiffs stylized_fact_diffs(const std::vector<double>& real_returns,
                                      const std::vector<double>& synth_returns,
                                      int max_lag) {
    if (max_lag < 1) throw ShapeError("stylized_fact_diffs: max_lag must be >= 1");
    if (static_cast<int>(real_returns.size()) <= max_lag + 2 ||
        static_cast<int>(synth_returns.size()) <= max_lag + 2)
        throw ShapeError("stylized_fact_diffs: series too short for max_lag");

    auto abs_of = [](const std::vector<double>& r) {
        std::vector<double> a(r.size());
        for (size_t t = 0; t < r.size(); ++t) a[t] = std::abs(r[t]);
        return a;
    };
    std::vector<double> real_abs = abs_of(real_returns);
    std::vector<double> synth_abs = abs_of(synth_returns);

    auto leverage_at = [](const std::vector<double>& r, const std::vector<double>& ra,
                          int lag) {
        std::vector<double> head(r.begin(), r.end() - lag);
        std::vector<double> tail(ra.begin() + lag, ra.end());
        auto rho = pearson(head, tail);
        if (!rho) throw DegenerateSeriesError("stylized_fact_diffs: constant series");
        return *rho;
    };

    StylizedFactDiffs out;
    for (int lag = 1; lag <= max_lag; ++lag) {
        out.acf_returns += std::abs(acf(real_returns, lag) - acf(synth_returns, lag));
        out.acf_abs_returns += std::abs(acf(real_abs, lag) - acf(synth_abs, lag));
        out.leverage += std::abs(leverage_at(real_returns, real_abs, lag) -
                                 leverage_at(synth_returns, synth_abs, lag));
    }
    double lags = static_cast<double>(max_lag);
    out.acf_returns /= lags;
    out.acf_abs_returns /= lags;
    out.leverage /= lags;
    return out;
}

} // namespace brt::evalkit
