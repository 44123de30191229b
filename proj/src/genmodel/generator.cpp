#include "brt/genmodel/generator.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <tuple>

#include "brt/logging.hpp"
#include "brt/nn/optim.hpp"
#include "brt/nn/serialize.hpp"

namespace brt::genmodel {

namespace {
constexpr char kMagic[] = "BTGEN01\n";
constexpr double kStdFloor = 1e-12;
constexpr double kVarEps = 1e-12;   // inside sqrt so sigma stays differentiable
constexpr double kStdRelDelta = 1e-8;
constexpr double kHistLo = -4.0, kHistHi = 4.0;
constexpr int kHistBins = 32;
} // namespace

void GenLossWeights::validate() const {
    const double w[] = {adv, moments, std_rel, mode, div};
    double total = 0.0;
    for (double x : w) {
        if (x < 0.0) throw ConfigError("generator loss weights must be nonnegative");
        total += x;
    }
    if (total <= 0.0) throw ConfigError("at least one generator loss weight must be positive");
}

void GeneratorConfig::validate() const {
    if (window < 2) throw ConfigError("generator window must be at least 2");
    if (instruments < 1 || features < 1) throw ConfigError("generator needs instruments and features");
    if (macro_dim < 0) throw ConfigError("macro dimension cannot be negative");
    if (d_latent < 1 || d_noise < 1 || hidden < 1)
        throw ConfigError("latent, noise, and hidden sizes must be positive");
    if (schedule.batch_size < 1) throw ConfigError("batch size must be positive");
    if (schedule.lr <= 0.0) throw ConfigError("learning rate must be positive");
    if (schedule.phase1_steps < 0 || schedule.phase2_steps < 0 || schedule.phase3_steps < 0)
        throw ConfigError("schedule step counts cannot be negative");
    weights.validate();
}

MarketGenerator::MarketGenerator(const GeneratorConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    RngStream rng(cfg_.seed, "gen-init");
    build_layers(rng);
}

void MarketGenerator::build_layers(RngStream& rng) {
    int sd = cfg_.series_dim();
    int md = cfg_.macro_dim;
    int dl = cfg_.d_latent;
    int h = cfg_.hidden;
    enc_lstm_ = nn::Lstm(ps_enc_, "enc.lstm", sd + 2 * md, h, rng);
    enc_out_ = nn::Linear(ps_enc_, "enc.out", h, dl, rng);
    dec_lstm_ = nn::Lstm(ps_dec_, "dec.lstm", dl, h, rng);
    dec_out_ = nn::Linear(ps_dec_, "dec.out", h, sd, rng);
    fore_lstm_ = nn::Lstm(ps_fore_, "fore.lstm", dl, h, rng);
    fore_out_ = nn::Linear(ps_fore_, "fore.out", h, dl, rng);
    hist_lstm_ = nn::Lstm(ps_gen_, "gen.hist", sd, h, rng);
    gen_lstm_ = nn::Lstm(ps_gen_, "gen.lstm", cfg_.d_noise + 2 * md + h, h, rng);
    gen_out_ = nn::Linear(ps_gen_, "gen.out", h, dl, rng);
    disc_lstm_ = nn::Lstm(ps_disc_, "disc.lstm", dl + 2 * md, h, rng);
    disc_out_ = nn::Linear(ps_disc_, "disc.out", h, 1, rng);
}

void MarketGenerator::fit_scaler(const std::vector<dataio::WindowTriple>& windows) {
    if (windows.empty()) throw NoDataError("cannot fit scaler on an empty window set");
    int sd = cfg_.series_dim();
    int md = cfg_.macro_dim;
    Eigen::VectorXd cnt = Eigen::VectorXd::Zero(sd);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(sd);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(sd);
    for (const auto& w : windows) {
        if (w.x_cur.cols() != sd || w.macro.cols() != md)
            throw ShapeError("window shape does not match generator config");
        for (int r = 0; r < w.x_cur.rows(); ++r)
            for (int k = 0; k < sd; ++k)
                if (w.x_cur_mask(r, k)) {
                    cnt(k) += 1.0;
                    sum(k) += w.x_cur(r, k);
                    sq(k) += w.x_cur(r, k) * w.x_cur(r, k);
                }
    }
    scaler_.x_mean = Eigen::VectorXd::Zero(sd);
    scaler_.x_std = Eigen::VectorXd::Ones(sd);
    int degenerate = 0;
    for (int k = 0; k < sd; ++k) {
        if (cnt(k) >= 2.0) {
            double mu = sum(k) / cnt(k);
            double var = sq(k) / cnt(k) - mu * mu;
            scaler_.x_mean(k) = mu;
            if (var > kStdFloor) scaler_.x_std(k) = std::sqrt(var);
            else ++degenerate;
        } else {
            ++degenerate;
        }
    }
    if (degenerate > 0)
        LogSink::global().record("generator scaler: " + std::to_string(degenerate) +
                                 " series columns constant or near-empty, std left at 1");

    scaler_.m_mean = Eigen::VectorXd::Zero(md);
    scaler_.m_std = Eigen::VectorXd::Ones(md);
    if (md > 0) {
        Eigen::VectorXd msum = Eigen::VectorXd::Zero(md);
        Eigen::VectorXd msq = Eigen::VectorXd::Zero(md);
        double rows = 0.0;
        for (const auto& w : windows) {
            for (int r = 0; r < w.macro.rows(); ++r) {
                for (int k = 0; k < md; ++k) {
                    msum(k) += w.macro(r, k);
                    msq(k) += w.macro(r, k) * w.macro(r, k);
                }
            }
            rows += static_cast<double>(w.macro.rows());
        }
        for (int k = 0; k < md; ++k) {
            double mu = msum(k) / rows;
            double var = msq(k) / rows - mu * mu;
            scaler_.m_mean(k) = mu;
            if (var > kStdFloor) scaler_.m_std(k) = std::sqrt(var);
        }
    }
    scaler_.fitted = true;
}

WindowBatch MarketGenerator::make_batch(const std::vector<dataio::WindowTriple>& windows,
                                        const std::vector<int>& indices) const {
    if (!scaler_.fitted) throw NotFittedError("scaler not fitted; call fit_scaler or train");
    if (indices.empty()) throw NoDataError("empty batch");
    int L = cfg_.window;
    int sd = cfg_.series_dim();
    int md = cfg_.macro_dim;
    int B = static_cast<int>(indices.size());

    WindowBatch b;
    b.batch = B;
    b.x_cur.assign(L, Mat::Zero(B, sd));
    b.x_cur_mask.assign(L, Mat::Zero(B, sd));
    b.x_hist.assign(L, Mat::Zero(B, sd));
    b.m_cur.assign(L, Mat::Zero(B, md));
    b.m_lag.assign(L, Mat::Zero(B, md));

    for (int bi = 0; bi < B; ++bi) {
        const auto& w = windows.at(static_cast<size_t>(indices[bi]));
        if (w.x_cur.rows() != L || w.x_cur.cols() != sd || w.macro.rows() != 2 * L ||
            w.macro.cols() != md)
            throw ShapeError("window shape does not match generator config");
        for (int j = 0; j < L; ++j) {
            for (int k = 0; k < sd; ++k) {
                if (w.x_cur_mask(j, k)) {
                    b.x_cur[j](bi, k) = (w.x_cur(j, k) - scaler_.x_mean(k)) / scaler_.x_std(k);
                    b.x_cur_mask[j](bi, k) = 1.0;
                }
                if (w.x_hist_mask(j, k))
                    b.x_hist[j](bi, k) = (w.x_hist(j, k) - scaler_.x_mean(k)) / scaler_.x_std(k);
            }
            for (int k = 0; k < md; ++k) {
                b.m_lag[j](bi, k) = (w.macro(j, k) - scaler_.m_mean(k)) / scaler_.m_std(k);
                b.m_cur[j](bi, k) = (w.macro(L + j, k) - scaler_.m_mean(k)) / scaler_.m_std(k);
            }
        }
    }
    return b;
}

std::vector<Var> MarketGenerator::constant_steps(Tape& t, const std::vector<Mat>& steps) const {
    std::vector<Var> out;
    out.reserve(steps.size());
    for (const auto& m : steps) out.push_back(t.constant(m));
    return out;
}

std::vector<Var> MarketGenerator::encode_steps(Tape& t, const std::vector<Var>& x,
                                               const std::vector<Var>& m_cur,
                                               const std::vector<Var>& m_lag) const {
    if (x.size() != static_cast<size_t>(cfg_.window) || m_cur.size() != x.size() ||
        m_lag.size() != x.size())
        throw ShapeError("encode: sequence lengths must equal the window");
    if (t.val(x[0]).cols() != cfg_.series_dim() || t.val(m_cur[0]).cols() != cfg_.macro_dim)
        throw ShapeError("encode: step width does not match config");
    std::vector<Var> ins;
    ins.reserve(x.size());
    for (size_t j = 0; j < x.size(); ++j)
        ins.push_back(t.concat_cols(t.concat_cols(x[j], m_cur[j]), m_lag[j]));
    auto hs = enc_lstm_.forward(t, ins);
    std::vector<Var> latents;
    latents.reserve(hs.size());
    for (Var h : hs) latents.push_back(enc_out_.forward(t, h));
    return latents;
}

std::vector<Var> MarketGenerator::decode_steps(Tape& t, const std::vector<Var>& latents) const {
    auto hs = dec_lstm_.forward(t, latents);
    std::vector<Var> out;
    out.reserve(hs.size());
    for (Var h : hs) out.push_back(dec_out_.forward(t, h));
    return out;
}

std::vector<Var> MarketGenerator::forecast_steps(Tape& t, const std::vector<Var>& latents) const {
    auto hs = fore_lstm_.forward(t, latents);
    std::vector<Var> out;
    out.reserve(hs.size());
    for (Var h : hs) out.push_back(fore_out_.forward(t, h));
    return out;
}

std::vector<Var> MarketGenerator::generate_steps(Tape& t, const std::vector<Mat>& noise,
                                                 const std::vector<Var>& m_cur,
                                                 const std::vector<Var>& m_lag,
                                                 const std::vector<Mat>& x_hist) const {
    if (noise.size() != static_cast<size_t>(cfg_.window) || m_cur.size() != noise.size() ||
        m_lag.size() != noise.size() || x_hist.size() != noise.size())
        throw ShapeError("generate: sequence lengths must equal the window");
    Var summary = hist_lstm_.last_hidden(t, constant_steps(t, x_hist));
    std::vector<Var> ins;
    ins.reserve(noise.size());
    for (size_t j = 0; j < noise.size(); ++j) {
        Var z = t.constant(noise[j]);
        ins.push_back(t.concat_cols(
            t.concat_cols(t.concat_cols(z, m_cur[j]), m_lag[j]), summary));
    }
    auto hs = gen_lstm_.forward(t, ins);
    std::vector<Var> latents;
    latents.reserve(hs.size());
    for (Var h : hs) latents.push_back(gen_out_.forward(t, h));
    return latents;
}

Var MarketGenerator::discriminate(Tape& t, const std::vector<Var>& latents,
                                  const std::vector<Var>& m_cur,
                                  const std::vector<Var>& m_lag) const {
    if (latents.size() != m_cur.size() || latents.size() != m_lag.size())
        throw ShapeError("discriminate: sequence lengths differ");
    std::vector<Var> ins;
    ins.reserve(latents.size());
    for (size_t j = 0; j < latents.size(); ++j)
        ins.push_back(t.concat_cols(t.concat_cols(latents[j], m_cur[j]), m_lag[j]));
    Var last = disc_lstm_.last_hidden(t, ins);
    return disc_out_.forward(t, last);
}

Var masked_mse(Tape& t, const std::vector<Var>& pred, const std::vector<Mat>& truth,
               const std::vector<Mat>& mask) {
    if (pred.size() != truth.size() || pred.size() != mask.size() || pred.empty())
        throw ShapeError("masked_mse: sequence lengths differ or empty");
    double count = 0.0;
    for (const auto& m : mask) count += m.sum();
    if (count <= 0.0) throw DegenerateBatchError("masked_mse: no valid positions in batch");
    Var total = t.constant(0.0);
    for (size_t j = 0; j < pred.size(); ++j) {
        Var diff = t.sub(pred[j], t.constant(truth[j]));
        total = t.add(total, t.sum(t.cmul(t.square_(diff), mask[j])));
    }
    return t.scale(total, 1.0 / count);
}

Var MarketGenerator::reconstruction_loss(Tape& t, const WindowBatch& b) const {
    auto x = constant_steps(t, b.x_cur);
    auto mc = constant_steps(t, b.m_cur);
    auto ml = constant_steps(t, b.m_lag);
    auto latents = encode_steps(t, x, mc, ml);
    auto recon = decode_steps(t, latents);
    return masked_mse(t, recon, b.x_cur, b.x_cur_mask);
}

Var MarketGenerator::forecast_loss(Tape& t, const std::vector<Var>& latents) const {
    if (latents.size() < 2) throw ShapeError("forecast_loss: needs at least two steps");
    auto preds = forecast_steps(t, latents);
    int L = static_cast<int>(latents.size());
    int B = static_cast<int>(t.val(latents[0]).rows());
    int D = static_cast<int>(t.val(latents[0]).cols());
    Var total = t.constant(0.0);
    for (int j = 0; j + 1 < L; ++j)
        total = t.add(total, t.sum(t.square_(t.sub(preds[j], latents[j + 1]))));
    double count = static_cast<double>((L - 1) * B * D);
    return t.scale(total, 1.0 / count);
}

std::pair<Var, Var> MarketGenerator::adversarial_losses(Tape& t,
                                                        const std::vector<Var>& h_real,
                                                        const std::vector<Var>& h_fake,
                                                        const std::vector<Var>& m_cur,
                                                        const std::vector<Var>& m_lag) const {
    auto h_ref = forecast_steps(t, h_fake);
    Var logits_real = discriminate(t, h_real, m_cur, m_lag);
    Var logits_fake = discriminate(t, h_fake, m_cur, m_lag);
    Var logits_ref = discriminate(t, h_ref, m_cur, m_lag);
    Var loss_adv = t.add(nn::bce_with_logits(t, logits_fake, 1.0),
                         nn::bce_with_logits(t, logits_ref, 1.0));
    Var loss_d = t.add(t.add(nn::bce_with_logits(t, logits_real, 1.0),
                             nn::bce_with_logits(t, logits_fake, 0.0)),
                       nn::bce_with_logits(t, logits_ref, 0.0));
    return {loss_adv, loss_d};
}

std::pair<Var, Var> MarketGenerator::moment_losses(Tape& t, const std::vector<Var>& fake,
                                                   const std::vector<Mat>& real,
                                                   const std::vector<Mat>& mask) const {
    if (fake.size() != real.size() || fake.size() != mask.size() || fake.empty())
        throw ShapeError("moment_losses: sequence lengths differ or empty");
    int C = static_cast<int>(real[0].cols());

    Mat cnt = Mat::Zero(1, C);
    for (const auto& m : mask) cnt += m.colwise().sum();
    int kept = 0, skipped = 0;
    Mat cinv = Mat::Zero(1, C);
    for (int k = 0; k < C; ++k) {
        if (cnt(0, k) >= 2.0) {
            cinv(0, k) = 1.0 / cnt(0, k);
            ++kept;
        } else {
            ++skipped;
        }
    }
    if (kept == 0) throw DegenerateBatchError("moment_losses: no feature column has two valid entries");
    if (skipped > 0)
        LogSink::global().record("moment loss: skipped " + std::to_string(skipped) +
                                 " feature columns with <2 valid entries");

    // identical op sequence for both sides so equal inputs give exactly zero
    auto stats = [&](const std::vector<Var>& xs) {
        Var s = t.constant(Mat::Zero(1, C));
        for (size_t j = 0; j < xs.size(); ++j)
            s = t.add(s, t.col_sum(t.cmul(xs[j], mask[j])));
        Var mu = t.cmul(s, cinv);
        Var neg_mu = t.scale(mu, -1.0);
        Var v = t.constant(Mat::Zero(1, C));
        for (size_t j = 0; j < xs.size(); ++j) {
            Var centered = t.add_rowvec(xs[j], neg_mu);
            v = t.add(v, t.col_sum(t.cmul(t.square_(centered), mask[j])));
        }
        Var var = t.cmul(v, cinv);
        Var sd = t.sqrt_(t.add_scalar(var, kVarEps));
        return std::make_tuple(mu, var, sd);
    };

    auto [mu_f, var_f, sd_f] = stats(fake);
    auto [mu_r, var_r, sd_r] = stats(constant_steps(t, real));

    Mat keep = Mat::Zero(1, C);
    for (int k = 0; k < C; ++k)
        if (cinv(0, k) > 0.0) keep(0, k) = 1.0 / static_cast<double>(kept);
    Var gaps = t.add(t.abs_(t.sub(mu_f, mu_r)), t.abs_(t.sub(sd_f, sd_r)));
    Var loss_moments = t.sum(t.cmul(gaps, keep));

    const Mat& var_r_vals = t.val(var_r);
    Mat keep_rel = Mat::Zero(1, C);
    for (int k = 0; k < C; ++k)
        if (cinv(0, k) > 0.0)
            keep_rel(0, k) = 1.0 / (static_cast<double>(kept) * (var_r_vals(0, k) + kStdRelDelta));
    Var loss_std = t.sum(t.cmul(t.abs_(t.sub(var_f, var_r)), keep_rel));
    return {loss_moments, loss_std};
}

Var mode_seeking_loss(Tape& t, const std::vector<Var>& out1, const std::vector<Var>& out2,
                      const std::vector<Mat>& n1, const std::vector<Mat>& n2, double delta) {
    if (out1.size() != out2.size() || n1.size() != n2.size() || out1.empty())
        throw ShapeError("mode_seeking_loss: sequence lengths differ or empty");
    int B = static_cast<int>(t.val(out1[0]).rows());

    Eigen::VectorXd noise_gap = Eigen::VectorXd::Zero(B);
    for (size_t j = 0; j < n1.size(); ++j)
        noise_gap += (n1[j] - n2[j]).cwiseAbs().rowwise().sum();

    int kept = 0;
    Mat inv_gap = Mat::Zero(B, 1);
    for (int b = 0; b < B; ++b)
        if (noise_gap(b) > 0.0) {
            inv_gap(b, 0) = 1.0 / noise_gap(b);
            ++kept;
        }
    if (kept == 0) return t.constant(0.0); // identical draws: term skipped

    Var out_gap = t.constant(Mat::Zero(B, 1));
    for (size_t j = 0; j < out1.size(); ++j) {
        Var a = t.abs_(t.sub(out1[j], out2[j]));
        int cols = static_cast<int>(t.val(a).cols());
        out_gap = t.add(out_gap, t.scale(t.row_mean(a), static_cast<double>(cols)));
    }
    Var ratio = t.cmul(out_gap, inv_gap);
    Var per_row = t.inv_(t.add_scalar(ratio, delta));
    Mat keep = Mat::Zero(B, 1);
    for (int b = 0; b < B; ++b)
        if (noise_gap(b) > 0.0) keep(b, 0) = 1.0 / static_cast<double>(kept);
    return t.sum(t.cmul(per_row, keep));
}

Var MarketGenerator::js_divergence_loss(Tape& t, const std::vector<Var>& fake,
                                        const std::vector<Mat>& real,
                                        const std::vector<Mat>& mask) const {
    if (fake.size() != real.size() || fake.size() != mask.size() || fake.empty())
        throw ShapeError("js_divergence_loss: sequence lengths differ or empty");
    int C = static_cast<int>(real[0].cols());
    int B = static_cast<int>(real[0].rows());
    int L = static_cast<int>(real.size());
    double width = (kHistHi - kHistLo) / kHistBins;

    // soft histogram of one column across all steps; weights kill masked cells
    auto histogram = [&](const std::vector<Var>& cols, const std::vector<Var>& wcols) {
        Var zero = t.constant(Mat::Zero(B, L));
        Var x = cols[0], w = wcols[0];
        for (int j = 1; j < L; ++j) {
            x = t.concat_cols(x, cols[j]);
            w = t.concat_cols(w, wcols[j]);
        }
        std::vector<Var> bins;
        bins.reserve(kHistBins);
        Var total = t.constant(0.0);
        for (int bi = 0; bi < kHistBins; ++bi) {
            double center = kHistLo + (bi + 0.5) * width;
            Var tri = t.max_(t.add_scalar(t.scale(t.abs_(t.add_scalar(x, -center)),
                                                  -1.0 / width),
                                          1.0),
                             zero);
            Var p = t.sum(t.mul(tri, w));
            bins.push_back(p);
            total = t.add(total, p);
        }
        Var inv_total = t.inv_(t.add_scalar(total, 1e-12));
        for (auto& p : bins) p = t.mul(p, inv_total);
        return bins;
    };

    Var loss = t.constant(0.0);
    for (int k = 0; k < C; ++k) {
        std::vector<Var> fcol, rcol, wcol;
        for (int j = 0; j < L; ++j) {
            fcol.push_back(t.slice_cols(fake[j], k, 1));
            rcol.push_back(t.constant(Mat(real[j].col(k))));
            wcol.push_back(t.constant(Mat(mask[j].col(k))));
        }
        auto p = histogram(fcol, wcol);
        auto q = histogram(rcol, wcol);
        Var js = t.constant(0.0);
        for (int bi = 0; bi < kHistBins; ++bi) {
            Var m = t.add(t.scale(p[bi], 0.5), t.scale(q[bi], 0.5));
            Var log_m = t.log_(t.add_scalar(m, 1e-12));
            Var term_p = t.mul(p[bi], t.sub(t.log_(t.add_scalar(p[bi], 1e-12)), log_m));
            Var term_q = t.mul(q[bi], t.sub(t.log_(t.add_scalar(q[bi], 1e-12)), log_m));
            js = t.add(js, t.add(t.scale(term_p, 0.5), t.scale(term_q, 0.5)));
        }
        loss = t.add(loss, js);
    }
    return t.scale(loss, 1.0 / static_cast<double>(C));
}

std::vector<Mat> MarketGenerator::draw_noise(int batch, RngStream& rng) const {
    std::vector<Mat> z(static_cast<size_t>(cfg_.window));
    for (auto& m : z) {
        m = Mat(batch, cfg_.d_noise);
        for (int b = 0; b < batch; ++b)
            for (int k = 0; k < cfg_.d_noise; ++k) m(b, k) = rng.normal();
    }
    return z;
}

TrainStats MarketGenerator::train(const std::vector<dataio::WindowTriple>& windows) {
    if (windows.empty()) throw NoDataError("train: no windows");
    if (!scaler_.fitted) fit_scaler(windows);
    const auto& sched = cfg_.schedule;
    int W = static_cast<int>(windows.size());

    RngStream batch_rng(cfg_.seed, "gen-train-batch");
    RngStream noise_rng(cfg_.seed, "gen-train-noise");

    auto sample_indices = [&]() {
        std::vector<int> idx(static_cast<size_t>(sched.batch_size));
        for (auto& i : idx) i = static_cast<int>(batch_rng.uniform_int(static_cast<uint64_t>(W)));
        return idx;
    };

    auto zero_all = [&]() {
        ps_enc_.zero_grad();
        ps_dec_.zero_grad();
        ps_fore_.zero_grad();
        ps_gen_.zero_grad();
        ps_disc_.zero_grad();
    };

    TrainStats stats;

    nn::Adam adam_enc(sched.lr), adam_dec(sched.lr);
    for (int s = 0; s < sched.phase1_steps; ++s) {
        auto b = make_batch(windows, sample_indices());
        Tape t;
        Var loss = reconstruction_loss(t, b);
        zero_all();
        t.backward(loss);
        adam_enc.step(ps_enc_);
        adam_dec.step(ps_dec_);
        stats.phase1_loss.push_back(t.val(loss)(0, 0));
    }
    if (sched.phase1_steps > 0 && phase_ < 1) phase_ = 1;

    nn::Adam adam_fore(sched.lr);
    for (int s = 0; s < sched.phase2_steps; ++s) {
        auto b = make_batch(windows, sample_indices());
        Tape t;
        auto latents = encode_steps(t, constant_steps(t, b.x_cur), constant_steps(t, b.m_cur),
                                    constant_steps(t, b.m_lag));
        Var loss = forecast_loss(t, latents);
        zero_all();
        t.backward(loss);
        adam_fore.step(ps_fore_);
        stats.phase2_loss.push_back(t.val(loss)(0, 0));
    }
    if (sched.phase2_steps > 0 && phase_ < 2) phase_ = 2;

    nn::Adam adam_g(sched.lr), adam_d(sched.lr);
    const auto& wts = cfg_.weights;
    int g_steps_per_iter = 1;
    int collapse_run = 0;
    for (int s = 0; s < sched.phase3_steps; ++s) {
        {
            auto b = make_batch(windows, sample_indices());
            Tape t;
            auto mc = constant_steps(t, b.m_cur);
            auto ml = constant_steps(t, b.m_lag);
            auto h_real = encode_steps(t, constant_steps(t, b.x_cur), mc, ml);
            auto h_fake = generate_steps(t, draw_noise(b.batch, noise_rng), mc, ml, b.x_hist);
            auto [loss_adv, loss_d] = adversarial_losses(t, h_real, h_fake, mc, ml);
            (void)loss_adv;
            zero_all();
            t.backward(loss_d);
            adam_d.step(ps_disc_);
            double dv = t.val(loss_d)(0, 0);
            stats.phase3_loss_d.push_back(dv);
            if (dv < 1e-3) ++collapse_run;
            else collapse_run = 0;
            if (collapse_run >= 200) {
                g_steps_per_iter = std::min(g_steps_per_iter * 2, 8);
                collapse_run = 0;
                ++stats.collapse_guard_triggers;
                LogSink::global().record(
                    "mode-collapse guard: discriminator loss pinned near zero, generator steps per iteration now " +
                    std::to_string(g_steps_per_iter));
            }
        }
        for (int gs = 0; gs < g_steps_per_iter; ++gs) {
            auto b = make_batch(windows, sample_indices());
            Tape t;
            auto mc = constant_steps(t, b.m_cur);
            auto ml = constant_steps(t, b.m_lag);
            auto z1 = draw_noise(b.batch, noise_rng);
            auto z2 = draw_noise(b.batch, noise_rng);
            auto h_fake1 = generate_steps(t, z1, mc, ml, b.x_hist);
            auto h_fake2 = generate_steps(t, z2, mc, ml, b.x_hist);
            auto h_ref1 = forecast_steps(t, h_fake1);
            auto h_ref2 = forecast_steps(t, h_fake2);
            Var logits_fake = discriminate(t, h_fake1, mc, ml);
            Var logits_ref = discriminate(t, h_ref1, mc, ml);
            Var loss_adv = t.add(nn::bce_with_logits(t, logits_fake, 1.0),
                                 nn::bce_with_logits(t, logits_ref, 1.0));
            auto x_fake1 = decode_steps(t, h_ref1);
            auto x_fake2 = decode_steps(t, h_ref2);
            auto [loss_m, loss_s] = moment_losses(t, x_fake1, b.x_cur, b.x_cur_mask);
            Var loss_mode = mode_seeking_loss(t, x_fake1, x_fake2, z1, z2);
            Var loss_g = t.add(t.add(t.scale(loss_adv, wts.adv), t.scale(loss_m, wts.moments)),
                               t.add(t.scale(loss_s, wts.std_rel), t.scale(loss_mode, wts.mode)));
            if (wts.div > 0.0) {
                Var js = js_divergence_loss(t, x_fake1, b.x_cur, b.x_cur_mask);
                loss_g = t.add(loss_g, t.scale(js, wts.div));
            }
            zero_all();
            t.backward(loss_g);
            adam_g.step(ps_gen_);
            stats.phase3_loss_g.push_back(t.val(loss_g)(0, 0));
        }
    }
    if (sched.phase3_steps > 0 && phase_ < 3) phase_ = 3;
    return stats;
}

Mat MarketGenerator::sample_window(const Mat& macro_window, const Mat& x_hist,
                                   RngStream& rng) const {
    if (phase_ < 2)
        throw NotFittedError("generator pretraining has not run; complete phases 1-2 before sampling");
    int L = cfg_.window;
    int sd = cfg_.series_dim();
    int md = cfg_.macro_dim;
    if (macro_window.rows() != 2 * L || macro_window.cols() != md)
        throw ShapeError("sample_window: macro window must be 2L x macro_dim");
    if (x_hist.rows() != L || x_hist.cols() != sd)
        throw ShapeError("sample_window: history must be L x (instruments*features)");

    std::vector<Mat> mc(static_cast<size_t>(L)), ml(static_cast<size_t>(L)),
        xh(static_cast<size_t>(L));
    for (int j = 0; j < L; ++j) {
        Mat cur(1, md), lag(1, md), h(1, sd);
        for (int k = 0; k < md; ++k) {
            lag(0, k) = (macro_window(j, k) - scaler_.m_mean(k)) / scaler_.m_std(k);
            cur(0, k) = (macro_window(L + j, k) - scaler_.m_mean(k)) / scaler_.m_std(k);
        }
        for (int k = 0; k < sd; ++k)
            h(0, k) = (x_hist(j, k) - scaler_.x_mean(k)) / scaler_.x_std(k);
        mc[static_cast<size_t>(j)] = cur;
        ml[static_cast<size_t>(j)] = lag;
        xh[static_cast<size_t>(j)] = h;
    }
    auto noise = draw_noise(1, rng);

    Tape t;
    auto mcv = constant_steps(t, mc);
    auto mlv = constant_steps(t, ml);
    auto h_fake = generate_steps(t, noise, mcv, mlv, xh);
    auto h_ref = forecast_steps(t, h_fake);
    auto x = decode_steps(t, h_ref);

    Mat out(L, sd);
    for (int j = 0; j < L; ++j)
        for (int k = 0; k < sd; ++k)
            out(j, k) = t.val(x[static_cast<size_t>(j)])(0, k) * scaler_.x_std(k) +
                        scaler_.x_mean(k);
    return out;
}

void MarketGenerator::save(std::ostream& os) const {
    os.write(kMagic, 8);
    nn::write_u32(os, static_cast<uint32_t>(cfg_.window));
    nn::write_u32(os, static_cast<uint32_t>(cfg_.instruments));
    nn::write_u32(os, static_cast<uint32_t>(cfg_.features));
    nn::write_u32(os, static_cast<uint32_t>(cfg_.macro_dim));
    nn::write_u32(os, static_cast<uint32_t>(cfg_.d_latent));
    nn::write_u32(os, static_cast<uint32_t>(cfg_.d_noise));
    nn::write_u32(os, static_cast<uint32_t>(cfg_.hidden));
    nn::write_f64(os, cfg_.weights.adv);
    nn::write_f64(os, cfg_.weights.moments);
    nn::write_f64(os, cfg_.weights.std_rel);
    nn::write_f64(os, cfg_.weights.mode);
    nn::write_f64(os, cfg_.weights.div);
    nn::write_u32(os, static_cast<uint32_t>(cfg_.schedule.phase1_steps));
    nn::write_u32(os, static_cast<uint32_t>(cfg_.schedule.phase2_steps));
    nn::write_u32(os, static_cast<uint32_t>(cfg_.schedule.phase3_steps));
    nn::write_u32(os, static_cast<uint32_t>(cfg_.schedule.batch_size));
    nn::write_f64(os, cfg_.schedule.lr);
    nn::write_u64(os, cfg_.seed);
    nn::write_u32(os, static_cast<uint32_t>(phase_));
    nn::write_u32(os, scaler_.fitted ? 1u : 0u);
    if (scaler_.fitted) {
        nn::write_mat(os, Mat(scaler_.x_mean.transpose()));
        nn::write_mat(os, Mat(scaler_.x_std.transpose()));
        nn::write_mat(os, Mat(scaler_.m_mean.transpose()));
        nn::write_mat(os, Mat(scaler_.m_std.transpose()));
    }
    nn::write_params(os, ps_enc_);
    nn::write_params(os, ps_dec_);
    nn::write_params(os, ps_fore_);
    nn::write_params(os, ps_gen_);
    nn::write_params(os, ps_disc_);
}

MarketGenerator MarketGenerator::load(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::string(magic, 8) != kMagic)
        throw ConfigError("not a generator checkpoint (bad magic)");
    GeneratorConfig cfg;
    cfg.window = static_cast<int>(nn::read_u32(is));
    cfg.instruments = static_cast<int>(nn::read_u32(is));
    cfg.features = static_cast<int>(nn::read_u32(is));
    cfg.macro_dim = static_cast<int>(nn::read_u32(is));
    cfg.d_latent = static_cast<int>(nn::read_u32(is));
    cfg.d_noise = static_cast<int>(nn::read_u32(is));
    cfg.hidden = static_cast<int>(nn::read_u32(is));
    cfg.weights.adv = nn::read_f64(is);
    cfg.weights.moments = nn::read_f64(is);
    cfg.weights.std_rel = nn::read_f64(is);
    cfg.weights.mode = nn::read_f64(is);
    cfg.weights.div = nn::read_f64(is);
    cfg.schedule.phase1_steps = static_cast<int>(nn::read_u32(is));
    cfg.schedule.phase2_steps = static_cast<int>(nn::read_u32(is));
    cfg.schedule.phase3_steps = static_cast<int>(nn::read_u32(is));
    cfg.schedule.batch_size = static_cast<int>(nn::read_u32(is));
    cfg.schedule.lr = nn::read_f64(is);
    cfg.seed = nn::read_u64(is);
    MarketGenerator g(cfg);
    g.phase_ = static_cast<int>(nn::read_u32(is));
    bool fitted = nn::read_u32(is) != 0;
    if (fitted) {
        g.scaler_.x_mean = nn::read_mat(is).transpose();
        g.scaler_.x_std = nn::read_mat(is).transpose();
        g.scaler_.m_mean = nn::read_mat(is).transpose();
        g.scaler_.m_std = nn::read_mat(is).transpose();
        g.scaler_.fitted = true;
    }
    nn::read_params(is, g.ps_enc_);
    nn::read_params(is, g.ps_dec_);
    nn::read_params(is, g.ps_fore_);
    nn::read_params(is, g.ps_gen_);
    nn::read_params(is, g.ps_disc_);
    return g;
}

} // namespace brt::genmodel
