#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "brt/errors.hpp"
#include "brt/rng.hpp"

namespace brt::nn {

using Mat = Eigen::MatrixXd;

// A trainable matrix with its gradient accumulator and Adam slots.
struct Param {
    std::string name;
    Mat value;
    Mat grad;
    Mat adam_m;
    Mat adam_v;

    Param(std::string n, int rows, int cols)
        : name(std::move(n)),
          value(Mat::Zero(rows, cols)),
          grad(Mat::Zero(rows, cols)),
          adam_m(Mat::Zero(rows, cols)),
          adam_v(Mat::Zero(rows, cols)) {}
};

// Flat parameter store for one network (or a group trained together).
// Supports round-tripping to a single vector, which is what the
// checkpoint format and the finite-difference harness operate on.
class ParamSet {
public:
    Param& add(const std::string& name, int rows, int cols) {
        params_.push_back(std::make_unique<Param>(name, rows, cols));
        return *params_.back();
    }

    // Uniform(-k, k) with k = 1/sqrt(fan_in), the usual torch-style init.
    Param& add_init(const std::string& name, int rows, int cols, RngStream& rng,
                    double fan_in_override = 0.0) {
        Param& p = add(name, rows, cols);
        double fan = fan_in_override > 0.0 ? fan_in_override : static_cast<double>(rows);
        double k = 1.0 / std::sqrt(fan);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) p.value(i, j) = (2.0 * rng.uniform() - 1.0) * k;
        return p;
    }

    size_t size() const {
        size_t n = 0;
        for (const auto& p : params_) n += static_cast<size_t>(p->value.size());
        return n;
    }

    std::vector<double> to_vector() const {
        std::vector<double> out;
        out.reserve(size());
        for (const auto& p : params_)
            out.insert(out.end(), p->value.data(), p->value.data() + p->value.size());
        return out;
    }

    void from_vector(const std::vector<double>& flat) {
        if (flat.size() != size()) throw ShapeError("parameter vector size mismatch");
        size_t off = 0;
        for (auto& p : params_) {
            std::copy(flat.begin() + off, flat.begin() + off + p->value.size(),
                      p->value.data());
            off += static_cast<size_t>(p->value.size());
        }
    }

    std::vector<double> grad_vector() const {
        std::vector<double> out;
        out.reserve(size());
        for (const auto& p : params_)
            out.insert(out.end(), p->grad.data(), p->grad.data() + p->grad.size());
        return out;
    }

    void zero_grad() {
        for (auto& p : params_) p->grad.setZero();
    }

    std::vector<std::unique_ptr<Param>>& items() { return params_; }
    const std::vector<std::unique_ptr<Param>>& items() const { return params_; }

    void copy_values_from(const ParamSet& other) {
        if (other.params_.size() != params_.size())
            throw ShapeError("ParamSet copy: layout mismatch");
        for (size_t i = 0; i < params_.size(); ++i)
            params_[i]->value = other.params_[i]->value;
    }

private:
    std::vector<std::unique_ptr<Param>> params_;
};

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape over dense matrices. Build a graph per training step,
// call backward() on a scalar node, read gradients off the Params.
// A Tape instance is single-owner and not thread-safe; concurrent callers
// use separate tapes.
class Tape {
public:
    Tape() { nodes_.reserve(1024); }
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    void clear() { nodes_.clear(); }
    size_t node_count() const { return nodes_.size(); }

    const Mat& val(Var v) const { return nodes_[v.id].value; }

    // ---- leaves -----------------------------------------------------------

    Var constant(Mat v) { return push(std::move(v), false, {}); }

    Var constant(double v) {
        Mat m(1, 1);
        m(0, 0) = v;
        return push(std::move(m), false, {});
    }

    Var param(Param& p) {
        Var out = push(p.value, true, {});
        Param* pp = &p;
        int self = out.id;
        nodes_[self].backward = [this, self, pp]() { pp->grad += nodes_[self].grad; };
        return out;
    }

    // ---- arithmetic -------------------------------------------------------

    Var add(Var a, Var b) {
        check_same_shape(a, b, "add");
        Var out = push(nodes_[a.id].value + nodes_[b.id].value, needs(a) || needs(b), {a, b});
        int self = out.id;
        nodes_[self].backward = [this, self, a, b]() {
            accum(a, nodes_[self].grad);
            accum(b, nodes_[self].grad);
        };
        return out;
    }

    Var sub(Var a, Var b) {
        check_same_shape(a, b, "sub");
        Var out = push(nodes_[a.id].value - nodes_[b.id].value, needs(a) || needs(b), {a, b});
        int self = out.id;
        nodes_[self].backward = [this, self, a, b]() {
            accum(a, nodes_[self].grad);
            accum(b, -nodes_[self].grad);
        };
        return out;
    }

    Var mul(Var a, Var b) {
        check_same_shape(a, b, "mul");
        Var out = push((nodes_[a.id].value.array() * nodes_[b.id].value.array()).matrix(),
                       needs(a) || needs(b), {a, b});
        int self = out.id;
        nodes_[self].backward = [this, self, a, b]() {
            if (needs(a))
                accum(a, (nodes_[self].grad.array() * nodes_[b.id].value.array()).matrix());
            if (needs(b))
                accum(b, (nodes_[self].grad.array() * nodes_[a.id].value.array()).matrix());
        };
        return out;
    }

    Var matmul(Var a, Var b) {
        if (nodes_[a.id].value.cols() != nodes_[b.id].value.rows())
            throw ShapeError("matmul: inner dimensions differ");
        Var out = push(nodes_[a.id].value * nodes_[b.id].value, needs(a) || needs(b), {a, b});
        int self = out.id;
        nodes_[self].backward = [this, self, a, b]() {
            if (needs(a)) accum(a, nodes_[self].grad * nodes_[b.id].value.transpose());
            if (needs(b)) accum(b, nodes_[a.id].value.transpose() * nodes_[self].grad);
        };
        return out;
    }

    // out = a + v, v a 1xC row vector broadcast over rows.
    Var add_rowvec(Var a, Var v) {
        if (nodes_[v.id].value.rows() != 1 ||
            nodes_[v.id].value.cols() != nodes_[a.id].value.cols())
            throw ShapeError("add_rowvec: bias shape mismatch");
        Var out = push(nodes_[a.id].value.rowwise() + nodes_[v.id].value.row(0),
                       needs(a) || needs(v), {a, v});
        int self = out.id;
        nodes_[self].backward = [this, self, a, v]() {
            accum(a, nodes_[self].grad);
            if (needs(v)) accum(v, nodes_[self].grad.colwise().sum());
        };
        return out;
    }

    // out_ij = a_ij * v_j, v a 1xC row vector.
    Var mul_rowvec(Var a, Var v) {
        if (nodes_[v.id].value.rows() != 1 ||
            nodes_[v.id].value.cols() != nodes_[a.id].value.cols())
            throw ShapeError("mul_rowvec: gain shape mismatch");
        Mat out = (nodes_[a.id].value.array().rowwise() *
                   nodes_[v.id].value.row(0).array())
                      .matrix();
        Var o = push(std::move(out), needs(a) || needs(v), {a, v});
        int self = o.id;
        nodes_[self].backward = [this, self, a, v]() {
            if (needs(a))
                accum(a, (nodes_[self].grad.array().rowwise() *
                          nodes_[v.id].value.row(0).array())
                             .matrix());
            if (needs(v))
                accum(v, (nodes_[self].grad.array() * nodes_[a.id].value.array())
                             .colwise()
                             .sum()
                             .matrix());
        };
        return o;
    }

    // Broadcast a Bx1 column to BxC.
    Var rep_cols(Var a, int cols) {
        if (nodes_[a.id].value.cols() != 1) throw ShapeError("rep_cols: expects column");
        Var out = push(nodes_[a.id].value.replicate(1, cols), needs(a), {a});
        int self = out.id;
        nodes_[self].backward = [this, self, a]() {
            accum(a, nodes_[self].grad.rowwise().sum());
        };
        return out;
    }

    Var scale(Var a, double s) {
        Var out = push(nodes_[a.id].value * s, needs(a), {a});
        int self = out.id;
        nodes_[self].backward = [this, self, a, s]() { accum(a, nodes_[self].grad * s); };
        return out;
    }

    Var add_scalar(Var a, double s) {
        Var out = push((nodes_[a.id].value.array() + s).matrix(), needs(a), {a});
        int self = out.id;
        nodes_[self].backward = [this, self, a]() { accum(a, nodes_[self].grad); };
        return out;
    }

    // Elementwise multiply by a constant matrix (masks, fixed scalings).
    Var cmul(Var a, const Mat& c) {
        if (c.rows() != nodes_[a.id].value.rows() || c.cols() != nodes_[a.id].value.cols())
            throw ShapeError("cmul: constant shape mismatch");
        Var out = push((nodes_[a.id].value.array() * c.array()).matrix(), needs(a), {a});
        int self = out.id;
        Mat cc = c;
        nodes_[self].backward = [this, self, a, cc]() {
            accum(a, (nodes_[self].grad.array() * cc.array()).matrix());
        };
        return out;
    }

    // ---- nonlinearities ---------------------------------------------------

    Var tanh_(Var a) {
        Var out = push(nodes_[a.id].value.array().tanh().matrix(), needs(a), {a});
        int self = out.id;
        nodes_[self].backward = [this, self, a]() {
            accum(a, (nodes_[self].grad.array() *
                      (1.0 - nodes_[self].value.array().square()))
                         .matrix());
        };
        return out;
    }

    Var sigmoid_(Var a) {
        Var out = push((1.0 / (1.0 + (-nodes_[a.id].value.array()).exp())).matrix(),
                       needs(a), {a});
        int self = out.id;
        nodes_[self].backward = [this, self, a]() {
            auto s = nodes_[self].value.array();
            accum(a, (nodes_[self].grad.array() * s * (1.0 - s)).matrix());
        };
        return out;
    }

    Var exp_(Var a) {
        Var out = push(nodes_[a.id].value.array().exp().matrix(), needs(a), {a});
        int self = out.id;
        nodes_[self].backward = [this, self, a]() {
            accum(a, (nodes_[self].grad.array() * nodes_[self].value.array()).matrix());
        };
        return out;
    }

    Var log_(Var a) {
        Var out = push(nodes_[a.id].value.array().log().matrix(), needs(a), {a});
        int self = out.id;
        nodes_[self].backward = [this, self, a]() {
            accum(a, (nodes_[self].grad.array() / nodes_[a.id].value.array()).matrix());
        };
        return out;
    }

    Var abs_(Var a) {
        Var out = push(nodes_[a.id].value.array().abs().matrix(), needs(a), {a});
        int self = out.id;
        nodes_[self].backward = [this, self, a]() {
            accum(a, (nodes_[self].grad.array() * nodes_[a.id].value.array().sign())
                         .matrix());
        };
        return out;
    }

    Var sqrt_(Var a) {
        Var out = push(nodes_[a.id].value.array().sqrt().matrix(), needs(a), {a});
        int self = out.id;
        nodes_[self].backward = [this, self, a]() {
            accum(a, (nodes_[self].grad.array() * 0.5 / nodes_[self].value.array())
                         .matrix());
        };
        return out;
    }

    Var square_(Var a) {
        Var out = push(nodes_[a.id].value.array().square().matrix(), needs(a), {a});
        int self = out.id;
        nodes_[self].backward = [this, self, a]() {
            accum(a, (nodes_[self].grad.array() * 2.0 * nodes_[a.id].value.array())
                         .matrix());
        };
        return out;
    }

    Var inv_(Var a) {
        Var out = push(nodes_[a.id].value.array().inverse().matrix(), needs(a), {a});
        int self = out.id;
        nodes_[self].backward = [this, self, a]() {
            accum(a, (-nodes_[self].grad.array() * nodes_[self].value.array().square())
                         .matrix());
        };
        return out;
    }

    Var clamp(Var a, double lo, double hi) {
        Var out = push(nodes_[a.id].value.array().max(lo).min(hi).matrix(), needs(a), {a});
        int self = out.id;
        nodes_[self].backward = [this, self, a, lo, hi]() {
            auto x = nodes_[a.id].value.array();
            Mat pass = ((x > lo) && (x < hi)).cast<double>().matrix();
            accum(a, (nodes_[self].grad.array() * pass.array()).matrix());
        };
        return out;
    }

    Var max_(Var a, Var b) {
        check_same_shape(a, b, "max");
        Var out = push(nodes_[a.id].value.array().max(nodes_[b.id].value.array()).matrix(),
                       needs(a) || needs(b), {a, b});
        int self = out.id;
        nodes_[self].backward = [this, self, a, b]() {
            Mat take_a = (nodes_[a.id].value.array() >= nodes_[b.id].value.array())
                             .cast<double>()
                             .matrix();
            if (needs(a))
                accum(a, (nodes_[self].grad.array() * take_a.array()).matrix());
            if (needs(b))
                accum(b, (nodes_[self].grad.array() * (1.0 - take_a.array())).matrix());
        };
        return out;
    }

    // ---- reductions -------------------------------------------------------

    Var sum(Var a) {
        Mat out(1, 1);
        out(0, 0) = nodes_[a.id].value.sum();
        Var o = push(std::move(out), needs(a), {a});
        int self = o.id;
        nodes_[self].backward = [this, self, a]() {
            accum(a, Mat::Constant(nodes_[a.id].value.rows(), nodes_[a.id].value.cols(),
                                   nodes_[self].grad(0, 0)));
        };
        return o;
    }

    Var mean(Var a) {
        double n = static_cast<double>(nodes_[a.id].value.size());
        return scale(sum(a), 1.0 / n);
    }

    // Column sums -> 1xC.
    Var col_sum(Var a) {
        Var out = push(nodes_[a.id].value.colwise().sum(), needs(a), {a});
        int self = out.id;
        nodes_[self].backward = [this, self, a]() {
            accum(a, nodes_[self].grad.replicate(nodes_[a.id].value.rows(), 1));
        };
        return out;
    }

    // Row means -> Bx1.
    Var row_mean(Var a) {
        double c = static_cast<double>(nodes_[a.id].value.cols());
        Var out = push(nodes_[a.id].value.rowwise().mean(), needs(a), {a});
        int self = out.id;
        nodes_[self].backward = [this, self, a, c]() {
            accum(a, (nodes_[self].grad / c).replicate(1, nodes_[a.id].value.cols()));
        };
        return out;
    }

    // ---- structure --------------------------------------------------------

    Var concat_cols(Var a, Var b) {
        if (nodes_[a.id].value.rows() != nodes_[b.id].value.rows())
            throw ShapeError("concat_cols: row mismatch");
        Mat out(nodes_[a.id].value.rows(),
                nodes_[a.id].value.cols() + nodes_[b.id].value.cols());
        out << nodes_[a.id].value, nodes_[b.id].value;
        Var o = push(std::move(out), needs(a) || needs(b), {a, b});
        int self = o.id;
        nodes_[self].backward = [this, self, a, b]() {
            int ca = static_cast<int>(nodes_[a.id].value.cols());
            int cb = static_cast<int>(nodes_[b.id].value.cols());
            accum(a, nodes_[self].grad.leftCols(ca));
            accum(b, nodes_[self].grad.rightCols(cb));
        };
        return o;
    }

    Var slice_cols(Var a, int start, int n) {
        if (start < 0 || n < 0 || start + n > nodes_[a.id].value.cols())
            throw ShapeError("slice_cols: out of range");
        Var out = push(nodes_[a.id].value.middleCols(start, n), needs(a), {a});
        int self = out.id;
        nodes_[self].backward = [this, self, a, start, n]() {
            Mat g = Mat::Zero(nodes_[a.id].value.rows(), nodes_[a.id].value.cols());
            g.middleCols(start, n) = nodes_[self].grad;
            accum(a, g);
        };
        return out;
    }

    // out_i = a(i, idx[i]); used to pick the taken action's Q-value per row.
    Var gather_cols(Var a, const std::vector<int>& idx) {
        if (static_cast<int>(idx.size()) != nodes_[a.id].value.rows())
            throw ShapeError("gather_cols: index count mismatch");
        Mat out(idx.size(), 1);
        for (size_t i = 0; i < idx.size(); ++i)
            out(static_cast<int>(i), 0) = nodes_[a.id].value(static_cast<int>(i), idx[i]);
        Var o = push(std::move(out), needs(a), {a});
        int self = o.id;
        std::vector<int> ix = idx;
        nodes_[self].backward = [this, self, a, ix]() {
            Mat g = Mat::Zero(nodes_[a.id].value.rows(), nodes_[a.id].value.cols());
            for (size_t i = 0; i < ix.size(); ++i)
                g(static_cast<int>(i), ix[i]) = nodes_[self].grad(static_cast<int>(i), 0);
            accum(a, g);
        };
        return o;
    }

    Var log_softmax_rows(Var a) {
        const Mat& x = nodes_[a.id].value;
        Mat out(x.rows(), x.cols());
        for (int i = 0; i < x.rows(); ++i) {
            double mx = x.row(i).maxCoeff();
            double lse = std::log((x.row(i).array() - mx).exp().sum()) + mx;
            out.row(i) = x.row(i).array() - lse;
        }
        Var o = push(std::move(out), needs(a), {a});
        int self = o.id;
        nodes_[self].backward = [this, self, a]() {
            const Mat& g = nodes_[self].grad;
            Mat p = nodes_[self].value.array().exp().matrix();
            Mat rowsum = g.rowwise().sum();
            accum(a, g - (p.array().colwise() * rowsum.col(0).array()).matrix());
        };
        return o;
    }

    // ---- driver -----------------------------------------------------------

    void backward(Var loss) {
        if (nodes_[loss.id].value.size() != 1)
            throw ShapeError("backward: loss must be scalar");
        for (auto& n : nodes_) {
            if (n.needs_grad) n.grad.setZero(n.value.rows(), n.value.cols());
        }
        nodes_[loss.id].grad = Mat::Ones(1, 1);
        for (int i = loss.id; i >= 0; --i) {
            if (nodes_[i].needs_grad && nodes_[i].backward) nodes_[i].backward();
        }
    }

private:
    struct Node {
        Mat value;
        Mat grad;
        bool needs_grad = false;
        std::function<void()> backward;
    };

    bool needs(Var v) const { return nodes_[v.id].needs_grad; }

    void accum(Var v, const Mat& g) {
        if (!nodes_[v.id].needs_grad) return;
        nodes_[v.id].grad += g;
    }

    void check_same_shape(Var a, Var b, const char* op) const {
        if (nodes_[a.id].value.rows() != nodes_[b.id].value.rows() ||
            nodes_[a.id].value.cols() != nodes_[b.id].value.cols())
            throw ShapeError(std::string(op) + ": shape mismatch");
    }

    Var push(Mat value, bool needs_grad, std::initializer_list<Var> parents) {
        (void)parents;
        Node n;
        n.value = std::move(value);
        n.needs_grad = needs_grad;
        nodes_.push_back(std::move(n));
        return Var{static_cast<int>(nodes_.size()) - 1};
    }

    std::vector<Node> nodes_;
};

} // namespace brt::nn
