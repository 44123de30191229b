#include "brt/dataio/windows.hpp"

#include "brt/logging.hpp"

namespace brt::dataio {

namespace {

void fill_block(const MarketTensor& panel, int row0, int L, Mat& vals, BoolMat& mask) {
    int I = panel.I(), F = panel.F();
    vals.resize(L, I * F);
    mask.resize(L, I * F);
    for (int r = 0; r < L; ++r) {
        for (int i = 0; i < I; ++i) {
            for (int f = 0; f < F; ++f) {
                vals(r, i * F + f) = panel.values[i](row0 + r, f);
                mask(r, i * F + f) = panel.mask[i](row0 + r, f);
            }
        }
    }
}

} // namespace

std::vector<WindowTriple> make_windows(const MarketTensor& panel, const MacroPanel& macro,
                                       const WindowSpec& spec) {
    spec.validate();
    panel.check_shapes();
    if (macro.T() != panel.T() || macro.dates != panel.dates)
        throw MisalignedPanelsError("make_windows: macro panel must share the market dates");

    int L = spec.L;
    int T = panel.T();
    std::vector<WindowTriple> out;
    if (T < 2 * L) {
        LogSink::global().record("make_windows: need " + std::to_string(2 * L) +
                                 " rows, have " + std::to_string(T) +
                                 "; no windows emitted");
        return out;
    }

    out.reserve(T - 2 * L + 1);
    for (int t = 2 * L - 1; t < T; ++t) {
        WindowTriple w;
        w.t = t;
        w.end_date = panel.dates[t];
        fill_block(panel, t - 2 * L + 1, L, w.x_hist, w.x_hist_mask);
        fill_block(panel, t - L + 1, L, w.x_cur, w.x_cur_mask);
        w.macro = macro.values.middleRows(t - 2 * L + 1, 2 * L);
        out.push_back(std::move(w));
    }
    return out;
}

} // namespace brt::dataio
