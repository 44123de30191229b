#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "brt/date.hpp"
#include "brt/errors.hpp"

namespace brt::dataio {

using Mat = Eigen::MatrixXd;
using BoolMat = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

constexpr int kFeatureCount = 5;
// open-to-close return, close-to-close return, low/close, high/close,
// log dollar volume
inline const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = {"oc", "cc", "lc", "hc", "ldv"};
    return names;
}

struct OhlcvRow {
    Date date;
    double open = 0, high = 0, low = 0, close = 0, volume = 0;
};

struct OhlcvFrame {
    std::string ticker;
    std::vector<OhlcvRow> rows;
};

// T x I x F panel stored instrument-major: values[i] is T x F.
struct MarketTensor {
    std::vector<Date> dates;            // length T
    std::vector<std::string> tickers;   // length I
    std::vector<std::string> features;  // length F
    std::vector<Mat> values;            // I matrices, each T x F
    std::vector<BoolMat> mask;          // same shapes as values

    int T() const { return static_cast<int>(dates.size()); }
    int I() const { return static_cast<int>(tickers.size()); }
    int F() const { return static_cast<int>(features.size()); }

    // One (instrument, feature) series over time with its validity flags.
    void series(int i, int f, std::vector<double>& out_vals,
                std::vector<bool>& out_valid) const {
        out_vals.resize(dates.size());
        out_valid.resize(dates.size());
        for (int t = 0; t < T(); ++t) {
            out_vals[t] = values[i](t, f);
            out_valid[t] = mask[i](t, f);
        }
    }

    void check_shapes() const {
        if (values.size() != tickers.size() || mask.size() != tickers.size())
            throw ShapeError("MarketTensor: instrument count mismatch");
        for (size_t i = 0; i < values.size(); ++i) {
            if (values[i].rows() != T() || values[i].cols() != F() ||
                mask[i].rows() != T() || mask[i].cols() != F())
                throw ShapeError("MarketTensor: panel shape mismatch");
        }
    }
};

// Macro indicator panel, forward-filled to trading-day frequency.
struct MacroPanel {
    std::vector<Date> dates;          // length T
    std::vector<std::string> names;   // length M
    Mat values;                       // T x M
    BoolMat mask;                     // T x M
    Eigen::VectorXd scale;            // per-indicator std on the training split

    int T() const { return static_cast<int>(dates.size()); }
    int M() const { return static_cast<int>(names.size()); }
};

struct SplitSpec {
    Date train_end;
    Date valid_end;
    Date test_end;

    void validate() const {
        if (!(train_end < valid_end && valid_end < test_end))
            throw ConfigError("split boundaries must be strictly increasing");
    }

    // 0 = train, 1 = valid, 2 = test, -1 = out of range
    int split_of(Date d) const {
        if (d <= train_end) return 0;
        if (d <= valid_end) return 1;
        if (d <= test_end) return 2;
        return -1;
    }
};

struct WindowSpec {
    int L = 21;

    void validate() const {
        if (L < 2) throw ConfigError("window length must be at least 2");
    }
};

} // namespace brt::dataio
