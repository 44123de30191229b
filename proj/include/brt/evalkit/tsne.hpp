#pragma once

#include <Eigen/Dense>

#include <vector>

namespace brt::evalkit {

struct TsneParams {
    int window = 21;
    double perplexity = 50.0;
    int iterations = 3000;
    double learning_rate = 200.0;
    unsigned long long seed = 0;
};

// Exact (quadratic) 1-D stochastic-neighbor embedding of the rows of X,
// with early exaggeration and the usual adaptive-gain gradient descent.
// Deterministic under a fixed seed.
Eigen::VectorXd tsne_embed_1d(const Eigen::MatrixXd& X, const TsneParams& params);

struct DriftDiagnosticRow {
    double zx = 0.0;
    double zy = 0.0;
    int phase = 0;
};

// Sliding windows of the derived-feature panel are flattened and embedded
// to Z_x; the aligned targets are embedded to Z_y; each output row carries
// the phase label of its window end. Rows = T - window + 1.
std::vector<DriftDiagnosticRow> tsne_drift_diagnostic(const Eigen::MatrixXd& panel,
                                                      const std::vector<double>& targets,
                                                      const std::vector<int>& phase,
                                                      const TsneParams& params);

// Mean silhouette coefficient of scalar values under integer labels; used
// to check that constructed regimes separate in the embedding.
double silhouette_1d(const std::vector<double>& values, const std::vector<int>& labels);

} // namespace brt::evalkit
