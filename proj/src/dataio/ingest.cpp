#include "brt/dataio/ingest.hpp"

#include <cmath>
#include <cstdlib>

#include "brt/csv.hpp"
#include "brt/logging.hpp"

namespace brt::dataio {

namespace {

double parse_number(const std::string& cell, const std::string& context) {
    char* end = nullptr;
    double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0')
        throw ConfigError("unparseable number '" + cell + "' in " + context);
    return v;
}

} // namespace

OhlcvFrame read_ohlcv_csv(const std::string& path, const std::string& ticker) {
    csv::Table table = csv::read_file(path);
    const std::vector<std::string> expected = {"date", "open", "high",
                                               "low",  "close", "volume"};
    if (table.header != expected)
        throw ConfigError("OHLCV header must be date,open,high,low,close,volume in " +
                          path);

    OhlcvFrame frame;
    frame.ticker = ticker;
    for (const auto& row : table.rows) {
        if (row.size() != 6)
            throw ConfigError("OHLCV row with wrong field count in " + path);
        OhlcvRow r;
        r.date = Date::parse(row[0]);
        r.open = parse_number(row[1], path);
        r.high = parse_number(row[2], path);
        r.low = parse_number(row[3], path);
        r.close = parse_number(row[4], path);
        r.volume = parse_number(row[5], path);
        if (!frame.rows.empty() && !(frame.rows.back().date < r.date))
            throw ConfigError("OHLCV dates not strictly increasing in " + path);
        frame.rows.push_back(r);
    }
    if (frame.rows.empty()) throw NoDataError("no OHLCV rows in " + path);
    return frame;
}

MacroPanel read_macro_csv(const std::string& path) {
    csv::Table table = csv::read_file(path);
    if (table.header.size() < 2 || table.header[0] != "date")
        throw ConfigError("macro header must start with 'date' in " + path);

    MacroPanel panel;
    panel.names.assign(table.header.begin() + 1, table.header.end());
    int M = panel.M();
    int T = static_cast<int>(table.rows.size());
    if (T == 0) throw NoDataError("no macro rows in " + path);
    panel.values = Mat::Zero(T, M);
    panel.mask = BoolMat::Constant(T, M, false);
    for (int t = 0; t < T; ++t) {
        const auto& row = table.rows[t];
        if (static_cast<int>(row.size()) != M + 1)
            throw ConfigError("macro row with wrong field count in " + path);
        Date d = Date::parse(row[0]);
        if (t > 0 && !(panel.dates.back() < d))
            throw ConfigError("macro dates not strictly increasing in " + path);
        panel.dates.push_back(d);
        for (int m = 0; m < M; ++m) {
            if (row[m + 1].empty()) continue;
            panel.values(t, m) = parse_number(row[m + 1], path);
            panel.mask(t, m) = true;
        }
    }
    return panel;
}

MacroPanel align_macro(const MacroPanel& raw, const std::vector<Date>& market_dates) {
    MacroPanel out;
    out.names = raw.names;
    out.dates = market_dates;
    int T = static_cast<int>(market_dates.size());
    int M = raw.M();
    out.values = Mat::Zero(T, M);
    out.mask = BoolMat::Constant(T, M, false);

    for (int m = 0; m < M; ++m) {
        int src = 0;
        double last = 0.0;
        bool have = false;
        for (int t = 0; t < T; ++t) {
            while (src < raw.T() && raw.dates[src] <= market_dates[t]) {
                if (raw.mask(src, m)) {
                    last = raw.values(src, m);
                    have = true;
                }
                ++src;
            }
            if (have) {
                out.values(t, m) = last;
                out.mask(t, m) = true;
            }
        }
    }
    return out;
}

MacroPanel compute_macro_scale(const MacroPanel& aligned, Date train_end) {
    MacroPanel out = aligned;
    int M = aligned.M();
    int train_rows = 0;
    while (train_rows < aligned.T() && aligned.dates[train_rows] <= train_end)
        ++train_rows;

    std::vector<int> keep;
    std::vector<double> scales;
    for (int m = 0; m < M; ++m) {
        double sum = 0.0;
        int n = 0;
        for (int t = 0; t < train_rows; ++t) {
            if (!aligned.mask(t, m)) continue;
            sum += aligned.values(t, m);
            ++n;
        }
        if (n < 2) {
            LogSink::global().record("compute_macro_scale: indicator '" +
                                     aligned.names[m] +
                                     "' has under 2 training readings, dropped");
            continue;
        }
        double mean = sum / n;
        double ss = 0.0;
        for (int t = 0; t < train_rows; ++t) {
            if (!aligned.mask(t, m)) continue;
            ss += (aligned.values(t, m) - mean) * (aligned.values(t, m) - mean);
        }
        double sd = std::sqrt(ss / (n - 1.0));
        if (sd <= 0.0) {
            LogSink::global().record("compute_macro_scale: indicator '" +
                                     aligned.names[m] +
                                     "' constant on the training split, dropped");
            continue;
        }
        keep.push_back(m);
        scales.push_back(sd);
    }

    out.names.clear();
    out.values = Mat(aligned.T(), static_cast<int>(keep.size()));
    out.mask = BoolMat(aligned.T(), static_cast<int>(keep.size()));
    out.scale = Eigen::VectorXd(static_cast<int>(keep.size()));
    for (size_t k = 0; k < keep.size(); ++k) {
        out.names.push_back(aligned.names[keep[k]]);
        out.values.col(static_cast<int>(k)) = aligned.values.col(keep[k]);
        out.mask.col(static_cast<int>(k)) = aligned.mask.col(keep[k]);
        out.scale(static_cast<int>(k)) = scales[k];
    }
    return out;
}

} // namespace brt::dataio
