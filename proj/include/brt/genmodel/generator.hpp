#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "brt/dataio/types.hpp"
#include "brt/dataio/windows.hpp"
#include "brt/nn/graph.hpp"
#include "brt/nn/layers.hpp"
#include "brt/rng.hpp"

namespace brt::genmodel {

using dataio::Mat;
using nn::Tape;
using nn::Var;

struct GenLossWeights {
    double adv = 1.0;
    double moments = 10.0;
    double std_rel = 10.0;
    double mode = 0.1;
    double div = 0.0;

    void validate() const;
};

struct TrainSchedule {
    int phase1_steps = 400;
    int phase2_steps = 300;
    int phase3_steps = 600;
    int batch_size = 32;
    double lr = 1e-3;
};

struct GeneratorConfig {
    int window = 21;  // L
    int instruments = 0;
    int features = dataio::kFeatureCount;
    int macro_dim = 0;
    int d_latent = 24;
    int d_noise = 16;
    int hidden = 64;
    GenLossWeights weights;
    TrainSchedule schedule;
    uint64_t seed = 0;

    int series_dim() const { return instruments * features; }
    void validate() const;
};

// Train-split standardization applied at the model boundary: series and
// macro enter standardized, sampled windows leave in original units.
struct Scaler {
    Eigen::VectorXd x_mean, x_std;  // per series column (I*F)
    Eigen::VectorXd m_mean, m_std;  // per macro indicator
    bool fitted = false;
};

struct TrainStats {
    std::vector<double> phase1_loss;
    std::vector<double> phase2_loss;
    std::vector<double> phase3_loss_g;
    std::vector<double> phase3_loss_d;
    int collapse_guard_triggers = 0;
};

// A standardized minibatch in step-major layout: element j of each sequence
// is a (B x dim) matrix for window step j. Masked series cells are zeroed
// and excluded from losses via the mask sequences.
struct WindowBatch {
    std::vector<Mat> x_cur, x_cur_mask;
    std::vector<Mat> x_hist;
    std::vector<Mat> m_cur, m_lag;  // macro rows [t-L+1, t] and [t-2L+1, t-L]
    int batch = 0;
};

// Masked mean-squared error averaged over valid positions. Exposed so the
// averaging rule is testable in isolation from any network.
Var masked_mse(Tape& t, const std::vector<Var>& pred, const std::vector<Mat>& truth,
               const std::vector<Mat>& mask);

// Diversity pressure between two draws under shared conditioning:
// 1 / (L1(out1 - out2) / L1(n1 - n2) + delta), averaged over rows whose
// noise draws differ.
Var mode_seeking_loss(Tape& t, const std::vector<Var>& out1, const std::vector<Var>& out2,
                      const std::vector<Mat>& n1, const std::vector<Mat>& n2,
                      double delta = 1e-5);

class MarketGenerator {
public:
    explicit MarketGenerator(const GeneratorConfig& cfg);

    const GeneratorConfig& config() const { return cfg_; }
    const Scaler& scaler() const { return scaler_; }
    int phase() const { return phase_; }

    // Standardize window triples into a step-major batch.
    WindowBatch make_batch(const std::vector<dataio::WindowTriple>& windows,
                           const std::vector<int>& indices) const;

    void fit_scaler(const std::vector<dataio::WindowTriple>& windows);

    // ---- tape builders (step-major sequences of (B x dim) vars) ----------
    std::vector<Var> encode_steps(Tape& t, const std::vector<Var>& x,
                                  const std::vector<Var>& m_cur,
                                  const std::vector<Var>& m_lag) const;
    std::vector<Var> decode_steps(Tape& t, const std::vector<Var>& latents) const;
    // Causal one-step forecast: output j predicts latent j+1.
    std::vector<Var> forecast_steps(Tape& t, const std::vector<Var>& latents) const;
    std::vector<Var> generate_steps(Tape& t, const std::vector<Mat>& noise,
                                    const std::vector<Var>& m_cur,
                                    const std::vector<Var>& m_lag,
                                    const std::vector<Mat>& x_hist) const;
    // Sequence-level logit (B x 1), conditioned on the macro window.
    Var discriminate(Tape& t, const std::vector<Var>& latents,
                     const std::vector<Var>& m_cur, const std::vector<Var>& m_lag) const;

    // ---- losses -----------------------------------------------------------
    Var reconstruction_loss(Tape& t, const WindowBatch& b) const;
    Var forecast_loss(Tape& t, const std::vector<Var>& latents) const;
    // (loss for g, loss for d); all discriminator calls are macro-conditioned.
    std::pair<Var, Var> adversarial_losses(Tape& t, const std::vector<Var>& h_real,
                                           const std::vector<Var>& h_fake,
                                           const std::vector<Var>& m_cur,
                                           const std::vector<Var>& m_lag) const;
    // (moment gap, relative variance gap), masked per feature column;
    // columns with fewer than two valid real entries are skipped and logged.
    std::pair<Var, Var> moment_losses(Tape& t, const std::vector<Var>& fake,
                                      const std::vector<Mat>& real,
                                      const std::vector<Mat>& mask) const;
    // Jensen-Shannon divergence between per-column soft histograms of real
    // and generated values (triangular kernel, fixed bins in standardized
    // units). Off by default via weights.div = 0.
    Var js_divergence_loss(Tape& t, const std::vector<Var>& fake,
                           const std::vector<Mat>& real,
                           const std::vector<Mat>& mask) const;

    // ---- training and sampling -------------------------------------------
    TrainStats train(const std::vector<dataio::WindowTriple>& windows);

    // One synthetic window (L x I*F, original units) under explicit
    // conditioning. Requires pretraining phases 1-2 to have run.
    Mat sample_window(const Mat& macro_window, const Mat& x_hist, RngStream& rng) const;

    void save(std::ostream& os) const;
    static MarketGenerator load(std::istream& is);

    // exposed for the finite-difference harness
    nn::ParamSet& encoder_params() { return ps_enc_; }
    nn::ParamSet& decoder_params() { return ps_dec_; }
    nn::ParamSet& forecaster_params() { return ps_fore_; }
    nn::ParamSet& generator_params() { return ps_gen_; }
    nn::ParamSet& discriminator_params() { return ps_disc_; }

private:
    void build_layers(RngStream& rng);
    std::vector<Var> constant_steps(Tape& t, const std::vector<Mat>& steps) const;
    std::vector<Mat> draw_noise(int batch, RngStream& rng) const;

    GeneratorConfig cfg_;
    Scaler scaler_;
    int phase_ = 0;

    nn::ParamSet ps_enc_, ps_dec_, ps_fore_, ps_gen_, ps_disc_;
    nn::Lstm enc_lstm_;
    nn::Linear enc_out_;
    nn::Lstm dec_lstm_;
    nn::Linear dec_out_;
    nn::Lstm fore_lstm_;
    nn::Linear fore_out_;
    nn::Lstm hist_lstm_;
    nn::Lstm gen_lstm_;
    nn::Linear gen_out_;
    nn::Lstm disc_lstm_;
    nn::Linear disc_out_;
};

} // namespace brt::genmodel
