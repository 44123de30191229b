#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "brt/nn/graph.hpp"
#include "brt/rng.hpp"

namespace brt::nn {

// Central finite-difference check of analytic gradients.
//
// `loss_and_grad(want_grad)` evaluates the loss at the current parameter
// values and, when want_grad is set, leaves dLoss/dtheta in the ParamSet's
// grad buffers. The checker perturbs each coordinate by +-step and compares.
struct GradCheckReport {
    double max_rel_err = 0.0;
    size_t coords_checked = 0;
    bool ok(double tol) const { return coords_checked > 0 && max_rel_err < tol; }
};

inline double grad_rel_err(double analytic, double numeric) {
    double denom = std::max(1e-6, std::abs(analytic) + std::abs(numeric));
    return std::abs(analytic - numeric) / denom;
}

inline GradCheckReport check_gradients(ParamSet& ps,
                                       const std::function<double(bool)>& loss_and_grad,
                                       double step = 1e-5, size_t max_coords = 0,
                                       RngStream* coord_rng = nullptr) {
    GradCheckReport report;
    ps.zero_grad();
    loss_and_grad(true);
    std::vector<double> analytic = ps.grad_vector();
    std::vector<double> theta = ps.to_vector();

    std::vector<size_t> coords(theta.size());
    for (size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (max_coords > 0 && max_coords < coords.size()) {
        // sample without replacement from the coordinate set
        RngStream fallback(12345);
        RngStream& rng = coord_rng ? *coord_rng : fallback;
        for (size_t i = 0; i < max_coords; ++i) {
            size_t j = i + rng.uniform_int(coords.size() - i);
            std::swap(coords[i], coords[j]);
        }
        coords.resize(max_coords);
    }

    for (size_t k : coords) {
        double orig = theta[k];
        theta[k] = orig + step;
        ps.from_vector(theta);
        double lp = loss_and_grad(false);
        theta[k] = orig - step;
        ps.from_vector(theta);
        double lm = loss_and_grad(false);
        theta[k] = orig;
        double numeric = (lp - lm) / (2.0 * step);
        report.max_rel_err = std::max(report.max_rel_err, grad_rel_err(analytic[k], numeric));
        ++report.coords_checked;
    }
    ps.from_vector(theta);
    return report;
}

} // namespace brt::nn
