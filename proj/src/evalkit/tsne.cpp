#include "brt/evalkit/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "brt/errors.hpp"
#include "brt/rng.hpp"

namespace brt::evalkit {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

Mat pairwise_sq_dists(const Mat& X) {
    Vec sq = X.rowwise().squaredNorm();
    Mat D = sq.replicate(1, X.rows()) + sq.transpose().replicate(X.rows(), 1) -
            2.0 * X * X.transpose();
    return D.cwiseMax(0.0);
}

// Conditional affinities with per-point bandwidth found by binary search so
// each row's entropy matches log(perplexity).
Mat conditional_affinities(const Mat& D, double perplexity) {
    int n = static_cast<int>(D.rows());
    Mat P = Mat::Zero(n, n);
    double log_u = std::log(perplexity);

    for (int i = 0; i < n; ++i) {
        double beta = 1.0;
        double beta_lo = -std::numeric_limits<double>::infinity();
        double beta_hi = std::numeric_limits<double>::infinity();

        Vec row(n);
        for (int iter = 0; iter < 50; ++iter) {
            double sum = 0.0;
            double weighted = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) {
                    row(j) = 0.0;
                    continue;
                }
                double p = std::exp(-beta * D(i, j));
                row(j) = p;
                sum += p;
                weighted += p * D(i, j);
            }
            if (sum <= 0.0) {
                // all neighbors collapsed; fall back to uniform
                for (int j = 0; j < n; ++j) row(j) = (j == i) ? 0.0 : 1.0;
                sum = static_cast<double>(n - 1);
                P.row(i) = row.transpose() / sum;
                break;
            }
            double entropy = std::log(sum) + beta * weighted / sum;
            double diff = entropy - log_u;
            P.row(i) = row.transpose() / sum;
            if (std::abs(diff) < 1e-5) break;
            if (diff > 0) {
                beta_lo = beta;
                beta = std::isinf(beta_hi) ? beta * 2.0 : (beta + beta_hi) / 2.0;
            } else {
                beta_hi = beta;
                beta = std::isinf(beta_lo) ? beta / 2.0 : (beta + beta_lo) / 2.0;
            }
        }
    }
    return P;
}

} // namespace

Vec tsne_embed_1d(const Mat& X, const TsneParams& params) {
    int n = static_cast<int>(X.rows());
    int min_n = static_cast<int>(3.0 * params.perplexity) + 1;
    if (n < min_n)
        throw ConfigError("tsne: " + std::to_string(n) + " points but perplexity " +
                          std::to_string(params.perplexity) + " needs at least " +
                          std::to_string(min_n) +
                          "; reduce perplexity or extend the sample");

    Mat D = pairwise_sq_dists(X);
    Mat Pc = conditional_affinities(D, params.perplexity);
    Mat P = (Pc + Pc.transpose()) / (2.0 * n);
    P = P.cwiseMax(1e-12);

    RngStream rng(params.seed, "tsne-init");
    Vec y(n);
    for (int i = 0; i < n; ++i) y(i) = rng.normal() * 1e-4;

    Vec inc = Vec::Zero(n);
    Vec gains = Vec::Ones(n);
    const int exaggeration_until = 250;
    const double exaggeration = 12.0;
    Mat Pwork = P * exaggeration;

    for (int iter = 0; iter < params.iterations; ++iter) {
        if (iter == exaggeration_until) Pwork = P;
        double momentum = iter < 250 ? 0.5 : 0.8;

        // student-t affinities in the embedding
        Mat num(n, n);
        double qsum = 0.0;
        for (int i = 0; i < n; ++i) {
            num(i, i) = 0.0;
            for (int j = i + 1; j < n; ++j) {
                double d = y(i) - y(j);
                double v = 1.0 / (1.0 + d * d);
                num(i, j) = v;
                num(j, i) = v;
                qsum += 2.0 * v;
            }
        }
        qsum = std::max(qsum, 1e-12);

        Vec grad = Vec::Zero(n);
        for (int i = 0; i < n; ++i) {
            double g = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                double q = std::max(num(i, j) / qsum, 1e-12);
                g += (Pwork(i, j) - q) * num(i, j) * (y(i) - y(j));
            }
            grad(i) = 4.0 * g;
        }

        for (int i = 0; i < n; ++i) {
            bool same_sign = (grad(i) > 0.0) == (inc(i) > 0.0);
            gains(i) = same_sign ? gains(i) * 0.8 : gains(i) + 0.2;
            gains(i) = std::max(gains(i), 0.01);
            inc(i) = momentum * inc(i) - params.learning_rate * gains(i) * grad(i);
            y(i) += inc(i);
        }
        y.array() -= y.mean();
    }
    return y;
}

std::vector<DriftDiagnosticRow> tsne_drift_diagnostic(const Mat& panel,
                                                      const std::vector<double>& targets,
                                                      const std::vector<int>& phase,
                                                      const TsneParams& params) {
    int T = static_cast<int>(panel.rows());
    int d = static_cast<int>(panel.cols());
    int w = params.window;
    if (w < 1) throw ConfigError("tsne: window must be positive");
    if (static_cast<int>(targets.size()) != T || static_cast<int>(phase.size()) != T)
        throw ShapeError("tsne_drift_diagnostic: panel/target/phase lengths differ");
    if (T < w) throw ConfigError("tsne: need at least `window` panel rows");

    int rows = T - w + 1;
    Mat X(rows, w * d);
    Mat Y(rows, 1);
    std::vector<int> row_phase(rows);
    for (int r = 0; r < rows; ++r) {
        int t = r + w - 1; // window end
        for (int k = 0; k < w; ++k)
            X.row(r).segment(static_cast<Eigen::Index>(k) * d, d) = panel.row(t - w + 1 + k);
        Y(r, 0) = targets[t];
        row_phase[r] = phase[t];
    }

    Vec zx = tsne_embed_1d(X, params);
    Vec zy = tsne_embed_1d(Y, params);

    std::vector<DriftDiagnosticRow> out(rows);
    for (int r = 0; r < rows; ++r) out[r] = {zx(r), zy(r), row_phase[r]};
    return out;
}

double silhouette_1d(const std::vector<double>& values, const std::vector<int>& labels) {
    size_t n = values.size();
    if (labels.size() != n) throw ShapeError("silhouette_1d: length mismatch");
    if (n < 3) throw ShapeError("silhouette_1d: need at least 3 points");

    std::vector<int> uniq = labels;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() < 2) throw ShapeError("silhouette_1d: need at least 2 clusters");

    double total = 0.0;
    long counted = 0;
    for (size_t i = 0; i < n; ++i) {
        double intra_sum = 0.0;
        long intra_n = 0;
        double best_other = std::numeric_limits<double>::infinity();
        for (int lbl : uniq) {
            if (lbl == labels[i]) continue;
            double s = 0.0;
            long c = 0;
            for (size_t j = 0; j < n; ++j) {
                if (labels[j] != lbl) continue;
                s += std::abs(values[i] - values[j]);
                ++c;
            }
            if (c > 0) best_other = std::min(best_other, s / static_cast<double>(c));
        }
        for (size_t j = 0; j < n; ++j) {
            if (j == i || labels[j] != labels[i]) continue;
            intra_sum += std::abs(values[i] - values[j]);
            ++intra_n;
        }
        if (intra_n == 0) continue; // singleton cluster contributes 0 by convention
        double a = intra_sum / static_cast<double>(intra_n);
        double b = best_other;
        total += (b - a) / std::max(a, b);
        ++counted;
    }
    return counted > 0 ? total / static_cast<double>(counted) : 0.0;
}

} // namespace brt::evalkit
