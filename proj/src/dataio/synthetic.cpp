#include "brt/dataio/synthetic.hpp"

#include <cmath>

#include "brt/dataio/transform.hpp"
#include "brt/rng.hpp"

namespace brt::dataio {

namespace {

// Stationary covariance of z_t = A z_{t-1} + w_t, Cov(w) = Q, via the
// vectorized discrete Lyapunov equation (I - kron(A, A)) vec(S) = vec(Q).
Mat lyapunov_stationary_cov(const Mat& A, const Mat& Q) {
    int n = static_cast<int>(A.rows());
    Mat K = Mat::Identity(n * n, n * n);
    for (int r1 = 0; r1 < n; ++r1)
        for (int c1 = 0; c1 < n; ++c1)
            for (int r2 = 0; r2 < n; ++r2)
                for (int c2 = 0; c2 < n; ++c2)
                    K(c1 * n + r1, c2 * n + r2) -= A(r1, r2) * A(c1, c2);
    Eigen::VectorXd vecQ(n * n);
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) vecQ(c * n + r) = Q(r, c);
    Eigen::VectorXd vecS = K.colPivHouseholderQr().solve(vecQ);
    Mat S(n, n);
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) S(r, c) = vecS(c * n + r);
    return (S + S.transpose()) / 2.0;
}

std::vector<double> filled(std::vector<double> v, int n, double fallback) {
    if (v.empty()) v.assign(n, fallback);
    if (static_cast<int>(v.size()) != n)
        throw ConfigError("synthetic panel: per-instrument parameter length mismatch");
    return v;
}

} // namespace

double SyntheticTruth::return_corr(int i, int j) const {
    return joint_cov(i + 1, j + 1) /
           std::sqrt(joint_cov(i + 1, i + 1) * joint_cov(j + 1, j + 1));
}

double SyntheticTruth::macro_corr(int i) const {
    return joint_cov(0, i + 1) / std::sqrt(joint_cov(0, 0) * joint_cov(i + 1, i + 1));
}

double SyntheticTruth::return_acf1(int i) const {
    return joint_lag1(i + 1, i + 1) / joint_cov(i + 1, i + 1);
}

SyntheticPanel make_synthetic_panel(uint64_t seed, int T, int instruments,
                                    int macro_indicators, const SyntheticParams& params) {
    if (T < 2 || instruments < 1 || macro_indicators < 1)
        throw ConfigError("synthetic panel: need T >= 2, instruments >= 1, macro >= 1");
    if (std::abs(params.phi_m) >= 1.0)
        throw ConfigError("synthetic panel: |phi_m| must be < 1");

    int I = instruments;
    SyntheticTruth truth;
    truth.a = filled(params.a, I, 0.01);
    truth.b = filled(params.b, I, 0.1);
    truth.sigma = filled(params.sigma, I, 0.005);
    truth.phi_m = params.phi_m;
    truth.sigma_m = params.sigma_m;
    for (double bi : truth.b)
        if (std::abs(bi) >= 1.0)
            throw ConfigError("synthetic panel: |b| must be < 1 for stationarity");

    // joint state-space of (m, r_1..r_I)
    int n = I + 1;
    Mat A = Mat::Zero(n, n);
    Mat Q = Mat::Zero(n, n);
    A(0, 0) = truth.phi_m;
    Q(0, 0) = truth.sigma_m * truth.sigma_m;
    for (int i = 0; i < I; ++i) {
        A(i + 1, 0) = truth.a[i] * truth.phi_m;
        A(i + 1, i + 1) = truth.b[i];
        Q(0, i + 1) = Q(i + 1, 0) = truth.a[i] * truth.sigma_m * truth.sigma_m;
        for (int j = 0; j < I; ++j)
            Q(i + 1, j + 1) = truth.a[i] * truth.a[j] * truth.sigma_m * truth.sigma_m +
                              (i == j ? truth.sigma[i] * truth.sigma[i] : 0.0);
    }
    truth.joint_cov = lyapunov_stationary_cov(A, Q);
    truth.joint_lag1 = A * truth.joint_cov;

    // sample the path from a stationary start
    RngStream rng(seed, "synthetic-panel");
    Eigen::VectorXd z(n);
    {
        Eigen::LLT<Mat> llt(truth.joint_cov +
                            1e-12 * Mat::Identity(n, n));
        Eigen::VectorXd white(n);
        for (int k = 0; k < n; ++k) white(k) = rng.normal();
        z = llt.matrixL() * white;
    }

    std::vector<double> m_path(T);
    Mat r_path(T, I);
    for (int t = 0; t < T; ++t) {
        if (t > 0) {
            double xi_m = rng.normal();
            Eigen::VectorXd next(n);
            next(0) = truth.phi_m * z(0) + truth.sigma_m * xi_m;
            for (int i = 0; i < I; ++i)
                next(i + 1) = truth.a[i] * next(0) + truth.b[i] * z(i + 1) +
                              truth.sigma[i] * rng.normal();
            z = next;
        }
        m_path[t] = z(0);
        for (int i = 0; i < I; ++i) r_path(t, i) = z(i + 1);
    }

    // reconstruct bars that reproduce r as the close-to-close return
    SyntheticPanel out;
    std::vector<Date> dates(T);
    Date d = Date::from_ymd(2000, 1, 3);
    for (int t = 0; t < T; ++t) {
        dates[t] = d;
        d = d.next_weekday();
    }

    for (int i = 0; i < I; ++i) {
        OhlcvFrame frame;
        frame.ticker = "SYN" + std::to_string(i);
        double close = params.start_price;
        for (int t = 0; t < T; ++t) {
            if (t > 0) close *= 1.0 + r_path(t, i);
            if (close <= 0.0)
                throw ConfigError("synthetic panel: price path went non-positive; "
                                  "reduce return scales");
            OhlcvRow row;
            row.date = dates[t];
            row.close = close;
            row.open = close / (1.0 + params.oc_fraction * r_path(t, i));
            double hi = std::max(row.open, row.close);
            double lo = std::min(row.open, row.close);
            row.high = hi * (1.0 + params.wick * std::abs(rng.normal()));
            row.low = lo * (1.0 - params.wick * std::abs(rng.normal()));
            row.volume =
                std::exp(params.ldv_base + params.ldv_noise * rng.normal()) / close;
            frame.rows.push_back(row);
        }
        out.frames.push_back(std::move(frame));
    }

    out.market = build_market_tensor(out.frames);

    out.macro.dates = dates;
    out.macro.values = Mat(T, macro_indicators);
    out.macro.mask = BoolMat::Constant(T, macro_indicators, true);
    out.macro.names.push_back("m_driver");
    for (int t = 0; t < T; ++t) out.macro.values(t, 0) = m_path[t];
    RngStream noise_rng(seed, "synthetic-macro-noise");
    for (int k = 1; k < macro_indicators; ++k) {
        out.macro.names.push_back("noise" + std::to_string(k));
        double x = noise_rng.normal();
        for (int t = 0; t < T; ++t) {
            x = 0.5 * x + noise_rng.normal();
            out.macro.values(t, k) = x;
        }
    }
    out.macro.scale = Eigen::VectorXd(macro_indicators);
    for (int k = 0; k < macro_indicators; ++k) {
        double mean = out.macro.values.col(k).mean();
        double ss = (out.macro.values.col(k).array() - mean).square().sum();
        out.macro.scale(k) = std::sqrt(ss / (T - 1.0));
    }

    out.truth = truth;
    return out;
}

} // namespace brt::dataio
