#include <doctest.h>

#include <cmath>
#include <vector>

#include "brt/errors.hpp"
#include "brt/evalkit/tsne.hpp"
#include "brt/rng.hpp"

using namespace brt;
using namespace brt::evalkit;
using Eigen::MatrixXd;

TEST_CASE("silhouette separates far clusters and punishes mixed ones") {
    std::vector<double> vals = {0.0, 0.1, 0.05, 10.0, 10.1, 10.05};
    std::vector<int> labels = {0, 0, 0, 1, 1, 1};
    CHECK(silhouette_1d(vals, labels) > 0.95);

    std::vector<int> shuffled = {0, 1, 0, 1, 0, 1};
    CHECK(silhouette_1d(vals, shuffled) < 0.0);
    CHECK_THROWS_AS(silhouette_1d(vals, std::vector<int>(6, 7)), ShapeError);
}

TEST_CASE("drift diagnostic emits one row per window") {
    int T = 121, w = 21;
    RngStream rng(5);
    MatrixXd panel(T, 2);
    std::vector<double> targets(T);
    std::vector<int> phase(T);
    for (int t = 0; t < T; ++t) {
        panel(t, 0) = rng.normal();
        panel(t, 1) = rng.normal();
        targets[t] = rng.normal();
        phase[t] = t < 60 ? 0 : 1;
    }
    TsneParams p;
    p.window = w;
    p.perplexity = 8.0;
    p.iterations = 120;
    p.seed = 42;
    auto rows = tsne_drift_diagnostic(panel, targets, phase, p);
    CHECK(rows.size() == 101);
    CHECK(rows.front().phase == phase[w - 1]);
    CHECK(rows.back().phase == 1);
}

TEST_CASE("embedding is deterministic under a fixed seed") {
    RngStream rng(6);
    MatrixXd X(40, 3);
    for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    TsneParams p;
    p.perplexity = 10.0;
    p.iterations = 150;
    p.seed = 7;
    Eigen::VectorXd a = tsne_embed_1d(X, p);
    Eigen::VectorXd b = tsne_embed_1d(X, p);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

    p.seed = 8;
    Eigen::VectorXd c = tsne_embed_1d(X, p);
    CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("too few points for the perplexity is a config error") {
    MatrixXd X = MatrixXd::Random(30, 2);
    TsneParams p; // default perplexity 50 needs 151 points
    CHECK_THROWS_AS(tsne_embed_1d(X, p), ConfigError);
}

TEST_CASE("regimes with disjoint returns separate in the embedding") {
    int T = 160;
    RngStream rng(9);
    MatrixXd panel(T, 2);
    std::vector<double> targets(T);
    std::vector<int> phase(T);
    for (int t = 0; t < T; ++t) {
        bool late = t >= T / 2;
        double r = (late ? -0.05 : 0.05) + 0.002 * rng.normal();
        panel(t, 0) = r;
        panel(t, 1) = std::abs(r);
        targets[t] = r;
        phase[t] = late ? 1 : 0;
    }
    TsneParams p;
    p.window = 21;
    p.perplexity = 20.0;
    p.iterations = 600;
    p.seed = 11;
    auto rows = tsne_drift_diagnostic(panel, targets, phase, p);

    std::vector<double> zx;
    std::vector<int> lbl;
    for (const auto& r : rows) {
        // windows straddling the regime switch carry mixed content; score the pure ones
        zx.push_back(r.zx);
        lbl.push_back(r.phase);
    }
    CHECK(silhouette_1d(zx, lbl) > 0.2);
}
