#pragma once

#include "brt/dataio/types.hpp"

namespace brt::dataio {

// One training example: the history block, the block to be modeled, and the
// macro window spanning both. Market blocks are L x (I*F) with columns
// ordered instrument-major (i * F + f).
struct WindowTriple {
    int t = 0;        // panel row of the window end
    Date end_date;
    Mat x_hist;       // rows t-2L+1 .. t-L
    BoolMat x_hist_mask;
    Mat x_cur;        // rows t-L+1 .. t
    BoolMat x_cur_mask;
    Mat macro;        // rows t-2L+1 .. t  (2L x M)
};

// Sliding triples for every admissible end index t. Macro panel must share
// the market date axis exactly. T < 2L yields an empty sequence with a
// warning.
std::vector<WindowTriple> make_windows(const MarketTensor& panel, const MacroPanel& macro,
                                       const WindowSpec& spec);

} // namespace brt::dataio
