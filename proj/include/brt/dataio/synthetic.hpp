#pragma once

#include <cstdint>

#include "brt/dataio/types.hpp"

namespace brt::dataio {

// Macro-driven AR(1) return process:
//   m_t = phi_m * m_{t-1} + sigma_m * xi_m
//   r_{t,i} = a_i * m_t + b_i * r_{t-1,i} + sigma_i * xi_i
// Bars are reconstructed from the returns so the full pipeline can ingest
// the fixture; the first macro indicator is m itself, extra ones are
// independent AR(1) noise.
struct SyntheticParams {
    double phi_m = 0.8;
    double sigma_m = 1.0;
    std::vector<double> a;      // macro loadings, default 0.01
    std::vector<double> b;      // return persistence, default 0.1
    std::vector<double> sigma;  // idiosyncratic vol, default 0.005
    double oc_fraction = 0.3;   // share of the daily move placed open-to-close
    double wick = 0.002;        // high/low extension scale
    double ldv_base = 16.0;
    double ldv_noise = 0.3;
    double start_price = 100.0;
};

// Analytic moments of the joint stationary process z = (m, r_1..r_I),
// from the discrete Lyapunov equation of its state-space form.
struct SyntheticTruth {
    std::vector<double> a, b, sigma;
    double phi_m = 0.0, sigma_m = 0.0;
    Mat joint_cov;   // (I+1) x (I+1), order (m, r_1..r_I)
    Mat joint_lag1;  // Cov(z_t, z_{t-1}) = A * joint_cov

    double return_var(int i) const { return joint_cov(i + 1, i + 1); }
    double return_corr(int i, int j) const;
    double macro_corr(int i) const;
    double return_acf1(int i) const;
};

struct SyntheticPanel {
    std::vector<OhlcvFrame> frames;
    MarketTensor market;
    MacroPanel macro;
    SyntheticTruth truth;
};

SyntheticPanel make_synthetic_panel(uint64_t seed, int T, int instruments,
                                    int macro_indicators,
                                    const SyntheticParams& params = {});

} // namespace brt::dataio
