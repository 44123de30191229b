#include "brt/agents/nets.hpp"

#include <algorithm>
#include <string>

#include "brt/errors.hpp"
#include "brt/nn/serialize.hpp"

namespace brt::agents {

namespace {

constexpr char kQMagic[] = "BTQNT01\n";
constexpr char kAvgMagic[] = "BTAVG01\n";
constexpr char kAdvMagic[] = "BTADV01\n";

using Mat = Eigen::MatrixXd;

std::vector<int> mlp_dims(int in, const std::vector<int>& hidden, int out) {
    std::vector<int> dims = {in};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(out);
    return dims;
}

void check_hidden(const std::vector<int>& hidden) {
    for (int h : hidden)
        if (h < 1) throw ConfigError("hidden layer width must be positive");
}

Mat stack_inputs(const std::vector<const Transition*>& batch, bool successor,
                 int state_dim, int belief_dim) {
    Mat x(static_cast<int>(batch.size()), state_dim + belief_dim);
    for (size_t i = 0; i < batch.size(); ++i) {
        const auto& tr = *batch[i];
        const Eigen::VectorXd& s = successor ? tr.s2 : tr.s;
        const Eigen::VectorXd& b = successor ? tr.b2 : tr.b;
        if (s.size() != state_dim || b.size() != belief_dim)
            throw ShapeError("transition state/belief dimensions do not match the net");
        x.row(static_cast<int>(i)).head(state_dim) = s;
        if (belief_dim > 0) x.row(static_cast<int>(i)).tail(belief_dim) = b;
    }
    return x;
}

void write_magic(std::ostream& os, const char* magic) { os.write(magic, 8); }

void check_magic(std::istream& is, const char* magic, const char* what) {
    char buf[8];
    is.read(buf, 8);
    if (!is || std::string(buf, 8) != std::string(magic, 8))
        throw ConfigError(std::string("not a ") + what + " checkpoint");
}

void write_hidden(std::ostream& os, const std::vector<int>& hidden) {
    nn::write_u32(os, static_cast<uint32_t>(hidden.size()));
    for (int h : hidden) nn::write_u32(os, static_cast<uint32_t>(h));
}

std::vector<int> read_hidden(std::istream& is) {
    const uint32_t n = nn::read_u32(is);
    if (n > 64) throw ConfigError("checkpoint declares an implausible layer count");
    std::vector<int> hidden(n);
    for (auto& h : hidden) h = static_cast<int>(nn::read_u32(is));
    return hidden;
}

} // namespace

int argmax_index(const Eigen::VectorXd& values) {
    int best = 0;
    for (int k = 1; k < values.size(); ++k)
        if (values[k] > values[best]) best = k;
    return best;
}

void QNetConfig::validate() const {
    if (state_dim < 1) throw ConfigError("state dimension must be positive");
    if (belief_dim < 0) throw ConfigError("belief dimension must be non-negative");
    if (actions < 2) throw ConfigError("need at least two actions");
    if (lr <= 0.0) throw ConfigError("learning rate must be positive");
    if (sync_period < 1) throw ConfigError("target sync period must be positive");
    check_hidden(hidden);
}

QNetwork::QNetwork(const QNetConfig& cfg) : cfg_(cfg), opt_(cfg.lr) {
    cfg_.validate();
    RngStream rng(cfg_.seed, "qnet-init");
    const auto dims = mlp_dims(cfg_.state_dim + cfg_.belief_dim, cfg_.hidden, cfg_.actions);
    online_ = nn::Mlp(ps_, "q", dims, rng);
    RngStream rng2(cfg_.seed, "qnet-target-init");
    target_ = nn::Mlp(target_ps_, "q", dims, rng2);
    target_ps_.copy_values_from(ps_);
}

Eigen::VectorXd QNetwork::forward_one(const nn::Mlp& net, const Eigen::VectorXd& s,
                                      const Eigen::VectorXd& b) const {
    if (s.size() != cfg_.state_dim || b.size() != cfg_.belief_dim)
        throw ShapeError("state/belief dimensions do not match the net");
    Mat x(1, cfg_.state_dim + cfg_.belief_dim);
    x.row(0).head(cfg_.state_dim) = s;
    if (cfg_.belief_dim > 0) x.row(0).tail(cfg_.belief_dim) = b;
    nn::Tape t;
    return t.val(net.forward(t, t.constant(x))).row(0).transpose();
}

Eigen::VectorXd QNetwork::q_values(const Eigen::VectorXd& s, const Eigen::VectorXd& b) const {
    return forward_one(online_, s, b);
}

Eigen::VectorXd QNetwork::target_q_values(const Eigen::VectorXd& s,
                                          const Eigen::VectorXd& b) const {
    return forward_one(target_, s, b);
}

int QNetwork::greedy_action(const Eigen::VectorXd& s, const Eigen::VectorXd& b) const {
    return argmax_index(q_values(s, b));
}

int QNetwork::act_epsilon_greedy(const Eigen::VectorXd& s, const Eigen::VectorXd& b,
                                 double eps_explore, RngStream& rng) const {
    if (eps_explore < 0.0 || eps_explore > 1.0)
        throw ConfigError("exploration rate must lie in [0, 1]");
    if (rng.uniform() < eps_explore)
        return static_cast<int>(rng.uniform_int(cfg_.actions));
    return greedy_action(s, b);
}

double QNetwork::td_batch_loss(const std::vector<const Transition*>& batch, double gamma,
                               bool want_grad) {
    const int B = static_cast<int>(batch.size());
    if (B == 0) throw DegenerateBatchError("TD update needs a nonempty batch");
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("discount must lie in [0, 1]");

    Mat x = stack_inputs(batch, false, cfg_.state_dim, cfg_.belief_dim);
    Mat x2 = stack_inputs(batch, true, cfg_.state_dim, cfg_.belief_dim);

    // bootstrap targets come from the frozen copy, outside the tape
    nn::Tape tt;
    const Mat& q2 = tt.val(target_.forward(tt, tt.constant(x2)));
    Mat mask = Mat::Zero(B, cfg_.actions);
    Mat target = Mat::Zero(B, cfg_.actions);
    for (int i = 0; i < B; ++i) {
        const auto& tr = *batch[i];
        if (tr.action < 0 || tr.action >= cfg_.actions)
            throw ShapeError("transition action index out of range");
        mask(i, tr.action) = 1.0;
        double y = tr.reward;
        if (!tr.done) y += gamma * q2.row(i).maxCoeff();
        target(i, tr.action) = y;
    }

    nn::Tape t;
    nn::Var q = online_.forward(t, t.constant(x));
    nn::Var diff = t.sub(t.cmul(q, mask), t.constant(target));
    nn::Var loss = t.scale(t.mean(t.square_(diff)), static_cast<double>(cfg_.actions));
    if (want_grad) t.backward(loss);
    return t.val(loss)(0, 0);
}

double QNetwork::td_update(const std::vector<const Transition*>& batch, double gamma) {
    ps_.zero_grad();
    const double value = td_batch_loss(batch, gamma, true);
    opt_.step(ps_);
    ++updates_;
    if (updates_ % cfg_.sync_period == 0) target_ps_.copy_values_from(ps_);
    return value;
}

void QNetwork::save(std::ostream& os) const {
    write_magic(os, kQMagic);
    nn::write_u32(os, static_cast<uint32_t>(cfg_.state_dim));
    nn::write_u32(os, static_cast<uint32_t>(cfg_.belief_dim));
    nn::write_u32(os, static_cast<uint32_t>(cfg_.actions));
    write_hidden(os, cfg_.hidden);
    nn::write_f64(os, cfg_.lr);
    nn::write_u32(os, static_cast<uint32_t>(cfg_.sync_period));
    nn::write_u64(os, cfg_.seed);
    nn::write_u64(os, static_cast<uint64_t>(updates_));
    nn::write_params(os, ps_);
    nn::write_params(os, target_ps_);
}

QNetwork QNetwork::load(std::istream& is) {
    check_magic(is, kQMagic, "Q-network");
    QNetConfig cfg;
    cfg.state_dim = static_cast<int>(nn::read_u32(is));
    cfg.belief_dim = static_cast<int>(nn::read_u32(is));
    cfg.actions = static_cast<int>(nn::read_u32(is));
    cfg.hidden = read_hidden(is);
    cfg.lr = nn::read_f64(is);
    cfg.sync_period = static_cast<int>(nn::read_u32(is));
    cfg.seed = nn::read_u64(is);
    const uint64_t updates = nn::read_u64(is);
    QNetwork net(cfg);
    nn::read_params(is, net.ps_);
    nn::read_params(is, net.target_ps_);
    net.updates_ = static_cast<long>(updates);
    return net;
}

void AvgPolicyConfig::validate() const {
    if (state_dim < 1) throw ConfigError("state dimension must be positive");
    if (belief_dim < 0) throw ConfigError("belief dimension must be non-negative");
    if (actions < 2) throw ConfigError("need at least two actions");
    if (lr <= 0.0) throw ConfigError("learning rate must be positive");
    check_hidden(hidden);
}

AvgPolicyNetwork::AvgPolicyNetwork(const AvgPolicyConfig& cfg) : cfg_(cfg), opt_(cfg.lr) {
    cfg_.validate();
    RngStream rng(cfg_.seed, "avgnet-init");
    net_ = nn::Mlp(ps_, "avg", mlp_dims(cfg_.state_dim + cfg_.belief_dim, cfg_.hidden,
                                        cfg_.actions),
                   rng);
    net_.layers.back().W->value.setZero();  // fresh policy is exactly uniform
    net_.layers.back().b->value.setZero();
}

Eigen::VectorXd AvgPolicyNetwork::action_probs(const Eigen::VectorXd& s,
                                               const Eigen::VectorXd& b) const {
    if (s.size() != cfg_.state_dim || b.size() != cfg_.belief_dim)
        throw ShapeError("state/belief dimensions do not match the net");
    Mat x(1, cfg_.state_dim + cfg_.belief_dim);
    x.row(0).head(cfg_.state_dim) = s;
    if (cfg_.belief_dim > 0) x.row(0).tail(cfg_.belief_dim) = b;
    nn::Tape t;
    nn::Var probs = t.exp_(t.log_softmax_rows(net_.forward(t, t.constant(x))));
    return t.val(probs).row(0).transpose();
}

int AvgPolicyNetwork::sample_action(const Eigen::VectorXd& s, const Eigen::VectorXd& b,
                                    RngStream& rng) const {
    const Eigen::VectorXd p = action_probs(s, b);
    const double u = rng.uniform();
    double acc = 0.0;
    for (int k = 0; k < p.size(); ++k) {
        acc += p[k];
        if (u < acc) return k;
    }
    return static_cast<int>(p.size()) - 1;
}

double AvgPolicyNetwork::ce_batch_loss(const std::vector<const PolicySample*>& batch,
                                       bool want_grad) {
    const int B = static_cast<int>(batch.size());
    if (B == 0) throw DegenerateBatchError("supervised update needs a nonempty batch");

    Mat x(B, cfg_.state_dim + cfg_.belief_dim);
    Mat neg_onehot = Mat::Zero(B, cfg_.actions);
    for (int i = 0; i < B; ++i) {
        const auto& ps = *batch[i];
        if (ps.s.size() != cfg_.state_dim || ps.b.size() != cfg_.belief_dim)
            throw ShapeError("policy sample dimensions do not match the net");
        if (ps.action < 0 || ps.action >= cfg_.actions)
            throw ShapeError("policy sample action index out of range");
        x.row(i).head(cfg_.state_dim) = ps.s;
        if (cfg_.belief_dim > 0) x.row(i).tail(cfg_.belief_dim) = ps.b;
        neg_onehot(i, ps.action) = -1.0;
    }

    nn::Tape t;
    nn::Var logp = t.log_softmax_rows(net_.forward(t, t.constant(x)));
    nn::Var loss = t.scale(t.mean(t.cmul(logp, neg_onehot)),
                           static_cast<double>(cfg_.actions));
    if (want_grad) t.backward(loss);
    return t.val(loss)(0, 0);
}

double AvgPolicyNetwork::supervised_update(const std::vector<const PolicySample*>& batch) {
    ps_.zero_grad();
    const double value = ce_batch_loss(batch, true);
    opt_.step(ps_);
    return value;
}

void AvgPolicyNetwork::save(std::ostream& os) const {
    write_magic(os, kAvgMagic);
    nn::write_u32(os, static_cast<uint32_t>(cfg_.state_dim));
    nn::write_u32(os, static_cast<uint32_t>(cfg_.belief_dim));
    nn::write_u32(os, static_cast<uint32_t>(cfg_.actions));
    write_hidden(os, cfg_.hidden);
    nn::write_f64(os, cfg_.lr);
    nn::write_u64(os, cfg_.seed);
    nn::write_params(os, ps_);
}

AvgPolicyNetwork AvgPolicyNetwork::load(std::istream& is) {
    check_magic(is, kAvgMagic, "policy-network");
    AvgPolicyConfig cfg;
    cfg.state_dim = static_cast<int>(nn::read_u32(is));
    cfg.belief_dim = static_cast<int>(nn::read_u32(is));
    cfg.actions = static_cast<int>(nn::read_u32(is));
    cfg.hidden = read_hidden(is);
    cfg.lr = nn::read_f64(is);
    cfg.seed = nn::read_u64(is);
    AvgPolicyNetwork net(cfg);
    nn::read_params(is, net.ps_);
    return net;
}

void AdversaryConfig::validate() const {
    if (state_dim < 1) throw ConfigError("state dimension must be positive");
    if (macro_dim < 1) throw ConfigError("macro dimension must be positive");
    if (lr <= 0.0) throw ConfigError("learning rate must be positive");
    for (int k : perturbable)
        if (k < 0 || k >= macro_dim)
            throw ConfigError("perturbable macro index out of range");
    check_hidden(hidden);
}

AdversaryQNetwork::AdversaryQNetwork(const AdversaryConfig& cfg) : cfg_(cfg), opt_(cfg.lr) {
    cfg_.validate();
    std::vector<int> targets = cfg_.perturbable;
    if (targets.empty())
        for (int m = 0; m < cfg_.macro_dim; ++m) targets.push_back(m);

    catalog_.push_back(Eigen::VectorXd::Zero(cfg_.macro_dim));
    for (int idx : targets) {
        Eigen::VectorXd up = Eigen::VectorXd::Zero(cfg_.macro_dim);
        up[idx] = 1.0;
        catalog_.push_back(up);
        catalog_.push_back(-up);
    }

    RngStream rng(cfg_.seed, "advnet-init");
    net_ = nn::Mlp(ps_, "adv", mlp_dims(cfg_.state_dim, cfg_.hidden, catalog_size()), rng);
}

Eigen::VectorXd AdversaryQNetwork::q_values(const Eigen::VectorXd& s) const {
    if (s.size() != cfg_.state_dim)
        throw ShapeError("state dimension does not match the adversary net");
    nn::Tape t;
    return t.val(net_.forward(t, t.constant(Mat(s.transpose())))).row(0).transpose();
}

int AdversaryQNetwork::greedy_index(const Eigen::VectorXd& s) const {
    return argmax_index(q_values(s));
}

int AdversaryQNetwork::act_epsilon_greedy(const Eigen::VectorXd& s, double eps_explore,
                                          RngStream& rng) const {
    if (eps_explore < 0.0 || eps_explore > 1.0)
        throw ConfigError("exploration rate must lie in [0, 1]");
    if (rng.uniform() < eps_explore)
        return static_cast<int>(rng.uniform_int(catalog_.size()));
    return greedy_index(s);
}

double AdversaryQNetwork::batch_loss(const std::vector<const AdversarySample*>& batch,
                                     bool want_grad) {
    const int B = static_cast<int>(batch.size());
    if (B == 0) throw DegenerateBatchError("adversary update needs a nonempty batch");

    const int K = catalog_size();
    Mat x(B, cfg_.state_dim);
    Mat mask = Mat::Zero(B, K);
    Mat target = Mat::Zero(B, K);
    for (int i = 0; i < B; ++i) {
        const auto& as = *batch[i];
        if (as.s.size() != cfg_.state_dim)
            throw ShapeError("adversary sample state dimension mismatch");
        if (as.pert_index < 0 || as.pert_index >= K)
            throw ShapeError("perturbation index outside the catalog");
        x.row(i) = as.s;
        mask(i, as.pert_index) = 1.0;
        target(i, as.pert_index) = -as.trader_reward;  // zero-sum bookkeeping
    }

    nn::Tape t;
    nn::Var q = net_.forward(t, t.constant(x));
    nn::Var diff = t.sub(t.cmul(q, mask), t.constant(target));
    nn::Var loss = t.scale(t.mean(t.square_(diff)), static_cast<double>(K));
    if (want_grad) t.backward(loss);
    return t.val(loss)(0, 0);
}

double AdversaryQNetwork::update(const std::vector<const AdversarySample*>& batch) {
    ps_.zero_grad();
    const double value = batch_loss(batch, true);
    opt_.step(ps_);
    return value;
}

void AdversaryQNetwork::save(std::ostream& os) const {
    write_magic(os, kAdvMagic);
    nn::write_u32(os, static_cast<uint32_t>(cfg_.state_dim));
    nn::write_u32(os, static_cast<uint32_t>(cfg_.macro_dim));
    nn::write_u32(os, static_cast<uint32_t>(cfg_.perturbable.size()));
    for (int k : cfg_.perturbable) nn::write_u32(os, static_cast<uint32_t>(k));
    write_hidden(os, cfg_.hidden);
    nn::write_f64(os, cfg_.lr);
    nn::write_u64(os, cfg_.seed);
    nn::write_params(os, ps_);
}

AdversaryQNetwork AdversaryQNetwork::load(std::istream& is) {
    check_magic(is, kAdvMagic, "adversary-network");
    AdversaryConfig cfg;
    cfg.state_dim = static_cast<int>(nn::read_u32(is));
    cfg.macro_dim = static_cast<int>(nn::read_u32(is));
    const uint32_t np = nn::read_u32(is);
    if (np > 4096) throw ConfigError("checkpoint declares an implausible perturbable set");
    cfg.perturbable.resize(np);
    for (auto& k : cfg.perturbable) k = static_cast<int>(nn::read_u32(is));
    cfg.hidden = read_hidden(is);
    cfg.lr = nn::read_f64(is);
    cfg.seed = nn::read_u64(is);
    AdversaryQNetwork net(cfg);
    nn::read_params(is, net.ps_);
    return net;
}

} // namespace brt::agents
