#pragma once

#include <string>
#include <vector>

#include "brt/nn/graph.hpp"

namespace brt::nn {

struct Linear {
    Param* W = nullptr;
    Param* b = nullptr;
    int in = 0, out = 0;

    Linear() = default;
    Linear(ParamSet& ps, const std::string& name, int in_dim, int out_dim, RngStream& rng)
        : in(in_dim), out(out_dim) {
        W = &ps.add_init(name + ".W", in_dim, out_dim, rng);
        b = &ps.add_init(name + ".b", 1, out_dim, rng, in_dim);
    }

    Var forward(Tape& t, Var x) const { return t.add_rowvec(t.matmul(x, t.param(*W)), t.param(*b)); }
};

// Gates packed [i f g o] along columns: Wx is in x 4H, Wh is H x 4H.
struct Lstm {
    Param* Wx = nullptr;
    Param* Wh = nullptr;
    Param* b = nullptr;
    int in = 0, hidden = 0;

    Lstm() = default;
    Lstm(ParamSet& ps, const std::string& name, int in_dim, int hidden_dim, RngStream& rng)
        : in(in_dim), hidden(hidden_dim) {
        Wx = &ps.add_init(name + ".Wx", in_dim, 4 * hidden_dim, rng);
        Wh = &ps.add_init(name + ".Wh", hidden_dim, 4 * hidden_dim, rng, hidden_dim);
        b = &ps.add_init(name + ".b", 1, 4 * hidden_dim, rng, hidden_dim);
        // forget-gate bias starts at 1 so early training does not erase state
        for (int j = hidden_dim; j < 2 * hidden_dim; ++j) b->value(0, j) = 1.0;
    }

    // xs: sequence of (B x in) steps; returns hidden states, one per step.
    std::vector<Var> forward(Tape& t, const std::vector<Var>& xs) const {
        std::vector<Var> hs;
        hs.reserve(xs.size());
        if (xs.empty()) return hs;
        int batch = static_cast<int>(t.val(xs[0]).rows());
        Var h = t.constant(Mat::Zero(batch, hidden));
        Var c = t.constant(Mat::Zero(batch, hidden));
        Var wx = t.param(*Wx);
        Var wh = t.param(*Wh);
        Var bias = t.param(*b);
        for (Var x : xs) {
            Var z = t.add_rowvec(t.add(t.matmul(x, wx), t.matmul(h, wh)), bias);
            Var ig = t.sigmoid_(t.slice_cols(z, 0, hidden));
            Var fg = t.sigmoid_(t.slice_cols(z, hidden, hidden));
            Var gg = t.tanh_(t.slice_cols(z, 2 * hidden, hidden));
            Var og = t.sigmoid_(t.slice_cols(z, 3 * hidden, hidden));
            c = t.add(t.mul(fg, c), t.mul(ig, gg));
            h = t.mul(og, t.tanh_(c));
            hs.push_back(h);
        }
        return hs;
    }

    Var last_hidden(Tape& t, const std::vector<Var>& xs) const {
        auto hs = forward(t, xs);
        if (hs.empty()) throw ShapeError("Lstm: empty sequence");
        return hs.back();
    }
};

// Tanh MLP; hidden layer count and widths from `dims` (in, h1, ..., out).
struct Mlp {
    std::vector<Linear> layers;

    Mlp() = default;
    Mlp(ParamSet& ps, const std::string& name, const std::vector<int>& dims, RngStream& rng) {
        for (size_t i = 0; i + 1 < dims.size(); ++i)
            layers.emplace_back(ps, name + ".l" + std::to_string(i), dims[i], dims[i + 1], rng);
    }

    Var forward(Tape& t, Var x) const {
        Var h = x;
        for (size_t i = 0; i < layers.size(); ++i) {
            h = layers[i].forward(t, h);
            if (i + 1 < layers.size()) h = t.tanh_(h);
        }
        return h;
    }
};

// Per-row normalization with learned gain/bias.
struct LayerNorm {
    Param* gain = nullptr;
    Param* bias = nullptr;
    int dim = 0;
    static constexpr double kEps = 1e-6;

    LayerNorm() = default;
    LayerNorm(ParamSet& ps, const std::string& name, int d, RngStream&) : dim(d) {
        gain = &ps.add(name + ".g", 1, d);
        gain->value.setOnes();
        bias = &ps.add(name + ".b", 1, d);
    }

    Var forward(Tape& t, Var x) const {
        int cols = static_cast<int>(t.val(x).cols());
        Var mu = t.row_mean(x);
        Var centered = t.sub(x, t.rep_cols(mu, cols));
        Var var = t.row_mean(t.square_(centered));
        Var inv_std = t.inv_(t.sqrt_(t.add_scalar(var, kEps)));
        Var normalized = t.mul(centered, t.rep_cols(inv_std, cols));
        return t.add_rowvec(t.mul_rowvec(normalized, t.param(*gain)), t.param(*bias));
    }
};

// Binary cross-entropy on a clamped logit column against a constant label.
// Logits are clamped to |x| <= 15 so the perfect-discriminator limit stays
// finite. Returns the mean over the batch.
inline Var bce_with_logits(Tape& t, Var logits, double label, double clamp_at = 15.0) {
    Var x = t.clamp(logits, -clamp_at, clamp_at);
    // softplus(x) - label*x
    Var sp = t.log_(t.add_scalar(t.exp_(x), 1.0));
    Var per = label == 0.0 ? sp : t.sub(sp, t.scale(x, label));
    return t.mean(per);
}

} // namespace brt::nn
