#include "brt/dataio/transform.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "brt/logging.hpp"

namespace brt::dataio {

FeatureRow transform_features(const OhlcvRow& row, double prev_close) {
    FeatureRow out;
    if (row.open <= 0.0 || row.high <= 0.0 || row.low <= 0.0 || row.close <= 0.0 ||
        prev_close <= 0.0) {
        LogSink::global().record("transform_features: non-positive price on " +
                                 row.date.iso() + ", row masked");
        return out; // fully masked
    }
    out.values[0] = row.close / row.open - 1.0;
    out.values[1] = row.close / prev_close - 1.0;
    out.values[2] = row.low / row.close;
    out.values[3] = row.high / row.close;
    out.valid[0] = out.valid[1] = out.valid[2] = out.valid[3] = true;
    if (row.volume > 0.0) {
        out.values[4] = std::log(row.close * row.volume);
        out.valid[4] = true;
    }
    return out;
}

MarketTensor build_market_tensor(const std::vector<OhlcvFrame>& frames) {
    MarketTensor mt;
    mt.features = feature_names();

    std::map<Date, int> date_index;
    for (const auto& f : frames)
        for (const auto& r : f.rows) date_index.emplace(r.date, 0);
    {
        int k = 0;
        for (auto& [d, idx] : date_index) {
            idx = k++;
            mt.dates.push_back(d);
        }
    }
    int T = mt.T();

    for (const auto& f : frames) {
        mt.tickers.push_back(f.ticker);
        Mat vals = Mat::Zero(T, kFeatureCount);
        BoolMat mask = BoolMat::Constant(T, kFeatureCount, false);

        double prev_close = 0.0;
        Date prev_date{};
        bool have_prev = false;
        for (const auto& r : f.rows) {
            if (have_prev && !(prev_date < r.date))
                throw ShapeError("build_market_tensor: dates not strictly increasing for " +
                                 f.ticker);
            int t = date_index.at(r.date);
            bool shape_ok = r.low <= std::min(r.open, r.close) &&
                            std::max(r.open, r.close) <= r.high && r.volume >= 0.0;
            if (!shape_ok) {
                LogSink::global().record("build_market_tensor: malformed bar for " +
                                         f.ticker + " on " + r.date.iso() + ", row masked");
            } else {
                FeatureRow fr = transform_features(
                    r, have_prev && prev_close > 0.0 ? prev_close : r.close);
                for (int k = 0; k < kFeatureCount; ++k) {
                    vals(t, k) = fr.values[k];
                    mask(t, k) = fr.valid[k];
                }
                // first usable bar has no previous close to difference against
                if (!have_prev || prev_close <= 0.0) mask(t, 1) = false;
            }
            prev_close = r.close;
            prev_date = r.date;
            have_prev = true;
        }
        mt.values.push_back(std::move(vals));
        mt.mask.push_back(std::move(mask));
    }
    mt.check_shapes();
    return mt;
}

} // namespace brt::dataio
