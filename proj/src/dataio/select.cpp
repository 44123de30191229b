#include "brt/dataio/select.hpp"

#include <cmath>

#include "brt/evalkit/fidelity.hpp"
#include "brt/logging.hpp"

namespace brt::dataio {

SelectionResult select_features(const MacroPanel& candidates,
                                const std::vector<double>& target,
                                const std::vector<bool>& target_valid,
                                double tau_corr, double tau_red) {
    if (static_cast<int>(target.size()) != candidates.T() ||
        target_valid.size() != target.size())
        throw MisalignedPanelsError("select_features: target not aligned to panel dates");
    if (!(tau_corr > 0.0 && tau_corr < 1.0 && tau_red > 0.0 && tau_red < 1.0))
        throw ConfigError("select_features: thresholds must lie in (0, 1)");

    int T = candidates.T(), M = candidates.M();
    auto column = [&](int m, std::vector<double>& v, std::vector<bool>& ok) {
        v.resize(T);
        ok.resize(T);
        for (int t = 0; t < T; ++t) {
            v[t] = candidates.values(t, m);
            ok[t] = candidates.mask(t, m);
        }
    };

    SelectionResult res;
    std::vector<int> relevant;
    std::vector<double> cv;
    std::vector<bool> cm;
    for (int m = 0; m < M; ++m) {
        column(m, cv, cm);
        auto rho = evalkit::masked_pearson(cv, cm, target, target_valid);
        if (!rho) {
            ++res.dropped_constant;
            LogSink::global().record("select_features: candidate '" + candidates.names[m] +
                                     "' has undefined target correlation, dropped");
            continue;
        }
        if (std::abs(*rho) > tau_corr) relevant.push_back(m);
    }

    std::vector<double> sv;
    std::vector<bool> sm;
    for (int m : relevant) {
        column(m, cv, cm);
        bool redundant = false;
        for (int s : res.indices) {
            column(s, sv, sm);
            auto rho = evalkit::masked_pearson(cv, cm, sv, sm);
            if (rho && std::abs(*rho) >= tau_red) {
                redundant = true;
                break;
            }
        }
        if (!redundant) {
            res.indices.push_back(m);
            res.names.push_back(candidates.names[m]);
        }
    }
    return res;
}

} // namespace brt::dataio
