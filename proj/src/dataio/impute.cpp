#include "brt/dataio/impute.hpp"

#include <cmath>

#include "brt/evalkit/fidelity.hpp"

namespace brt::dataio {

std::vector<Mat> instrument_correlations(const MarketTensor& panel, Date train_end) {
    panel.check_shapes();
    int I = panel.I(), F = panel.F();
    int train_rows = 0;
    while (train_rows < panel.T() && panel.dates[train_rows] <= train_end) ++train_rows;

    std::vector<Mat> out(F, Mat::Identity(I, I));
    std::vector<double> xi(train_rows), xj(train_rows);
    std::vector<bool> mi(train_rows), mj(train_rows);
    for (int f = 0; f < F; ++f) {
        for (int i = 0; i < I; ++i) {
            for (int j = i + 1; j < I; ++j) {
                for (int t = 0; t < train_rows; ++t) {
                    xi[t] = panel.values[i](t, f);
                    mi[t] = panel.mask[i](t, f);
                    xj[t] = panel.values[j](t, f);
                    mj[t] = panel.mask[j](t, f);
                }
                auto rho = evalkit::masked_pearson(xi, mi, xj, mj);
                double r = rho.value_or(0.0);
                out[f](i, j) = r;
                out[f](j, i) = r;
            }
        }
    }
    return out;
}

MarketTensor impute_correlation_weighted(const MarketTensor& panel,
                                         const std::vector<Mat>& corr) {
    panel.check_shapes();
    int I = panel.I(), F = panel.F(), T = panel.T();
    if (static_cast<int>(corr.size()) != F)
        throw ShapeError("impute: need one correlation matrix per feature");
    for (const Mat& c : corr)
        if (c.rows() != I || c.cols() != I)
            throw ShapeError("impute: correlation matrix must be instruments x instruments");

    MarketTensor out = panel;
    for (int f = 0; f < F; ++f) {
        for (int i = 0; i < I; ++i) {
            for (int t = 0; t < T; ++t) {
                if (panel.mask[i](t, f)) continue;
                double wsum = 0.0, acc = 0.0;
                for (int j = 0; j < I; ++j) {
                    if (j == i || !panel.mask[j](t, f)) continue;
                    double w = std::exp(corr[f](i, j));
                    wsum += w;
                    acc += w * panel.values[j](t, f);
                }
                if (wsum > 0.0) {
                    out.values[i](t, f) = acc / wsum;
                    out.mask[i](t, f) = true;
                }
            }
        }
    }
    return out;
}

} // namespace brt::dataio
