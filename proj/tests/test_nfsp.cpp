#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "brt/agents/baselines.hpp"
#include "brt/evalkit/wilcoxon.hpp"
#include "brt/nfsp/agent.hpp"
#include "brt/nfsp/matrix_game.hpp"
#include "brt/nfsp/trainer.hpp"

using namespace brt;
using namespace brt::nfsp;

namespace {

// One traded instrument whose next-day return follows the single macro
// indicator: cc_{t+1} = 0.01 * m_t, with m cycling 7 up-days to 3 down.
dataio::Dataset macro_driven_dataset(int T) {
    const std::vector<double> block = {1, 1, 1, -1, 1, 1, -1, 1, 1, -1};
    dataio::Dataset ds;
    Date d = Date::parse("2016-01-04");
    for (int t = 0; t < T; ++t) {
        ds.market.dates.push_back(d);
        d = d.next_weekday();
    }
    ds.market.tickers = {"TST"};
    ds.market.features = dataio::feature_names();
    ds.market.values = {dataio::Mat::Zero(T, 5)};
    ds.market.mask = {dataio::BoolMat::Constant(T, 5, true)};
    ds.macro.dates = ds.market.dates;
    ds.macro.names = {"m0"};
    ds.macro.values = dataio::Mat::Zero(T, 1);
    ds.macro.mask = dataio::BoolMat::Constant(T, 1, true);
    ds.macro.scale = Eigen::VectorXd::Ones(1);
    for (int t = 0; t < T; ++t) {
        const double m = block[t % block.size()];
        ds.macro.values(t, 0) = m;
        if (t + 1 < T) ds.market.values[0](t + 1, 1) = 0.01 * m;
        ds.market.values[0](t, 2) = 0.99;
        ds.market.values[0](t, 3) = 1.01;
        ds.market.values[0](t, 4) = 15.0 + 0.02 * (t % 7);
    }
    return ds;
}

dataio::SplitSpec cover_all(const std::vector<Date>& dates) {
    dataio::SplitSpec s;
    s.train_end = dates.back();
    s.valid_end = Date(dates.back().serial() + 7);
    s.test_end = Date(dates.back().serial() + 14);
    return s;
}

market_env::TradingEnv make_env(const dataio::Dataset& ds, double fee = 0.0) {
    market_env::EnvConfig cfg;
    cfg.window = 6;
    cfg.fee = fee;
    return market_env::TradingEnv(ds, cover_all(ds.market.dates), 0, cfg);
}

NfspConfig small_config(uint64_t seed) {
    NfspConfig cfg;
    cfg.total_steps = 300;
    cfg.q_hidden = {8};
    cfg.avg_hidden = {8};
    cfg.adv_hidden = {8};
    cfg.qbn_hidden = 8;
    cfg.batch_size = 8;
    cfg.q_warmup = 20;
    cfg.circular_capacity = 1000;
    cfg.reservoir_capacity = 1000;
    cfg.adversary_capacity = 1000;
    cfg.qbn_buffer_capacity = 256;
    cfg.sync_period = 50;
    cfg.log_every = 50;
    cfg.seed = seed;
    return cfg;
}

// index of the macro indicator inside the state vector
constexpr int kMacroSlot = market_env::kIndicatorCount + dataio::kFeatureCount;

} // namespace

TEST_CASE("anticipatory branch routes the reservoir exactly") {
    NfspAgentConfig cfg;
    cfg.state_dim = 2;
    cfg.q_hidden = {8};
    cfg.avg_hidden = {8};
    cfg.batch_size = 4;
    cfg.circular_capacity = 64;
    cfg.reservoir_capacity = 100000;
    cfg.q_warmup = 10;
    cfg.seed = 1;

    RngStream rng(2);
    auto drive = [&](double eta, int n) {
        NfspAgent agent(cfg);
        const Eigen::VectorXd b(0);
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd s = Eigen::VectorXd::Zero(2);
            s[0] = rng.normal();
            const auto d = agent.act(s, b, eta, 0.1);
            agents::Transition tr;
            tr.s = s;
            tr.b = b;
            tr.action = d.action;
            tr.reward = rng.normal();
            tr.s2 = s;
            tr.b2 = b;
            tr.done = true;
            agent.observe(tr, d.best_response);
            agent.update();
        }
        return std::pair<int64_t, int64_t>(agent.reservoir().items_seen(),
                                           agent.best_response_steps());
    };

    SUBCASE("eta 1 stores every step") {
        auto [seen, br] = drive(1.0, 300);
        CHECK(seen == 300);
        CHECK(br == 300);
    }
    SUBCASE("eta 0 never stores") {
        auto [seen, br] = drive(0.0, 300);
        CHECK(seen == 0);
        CHECK(br == 0);
    }
    SUBCASE("intermediate eta mixes within the binomial band") {
        const int n = 20000;
        auto [seen, br] = drive(0.3, n);
        CHECK(seen == br);  // routing law: reservoir insertions == BR steps
        const double freq = static_cast<double>(br) / n;
        const double band = 3.0 * std::sqrt(0.3 * 0.7 / n);
        INFO("best-response frequency ", freq);
        CHECK(std::abs(freq - 0.3) < band);
    }
}

TEST_CASE("matrix-game self-play approaches the mixed Nash") {
    Eigen::VectorXd half(2);
    half << 0.5, 0.5;

    SUBCASE("matching pennies") {
        Eigen::MatrixXd payoff(2, 2);
        payoff << 1, -1, -1, 1;
        for (uint64_t seed = 0; seed < 5; ++seed) {
            MatrixGameConfig cfg;
            cfg.steps = 60000;
            cfg.seed = seed;
            const auto res = train_matrix_nfsp(payoff, cfg);
            INFO("seed ", seed, " row ", res.row_policy[0], " col ", res.col_policy[0]);
            CHECK(total_variation(res.row_policy, half) <= 0.1);
            CHECK(total_variation(res.col_policy, half) <= 0.1);
        }
    }

    SUBCASE("biased game with asymmetric row equilibrium") {
        Eigen::MatrixXd payoff(2, 2);
        payoff << 1, -1, -3, 3;
        Eigen::VectorXd row_star(2);
        row_star << 0.75, 0.25;
        for (uint64_t seed = 0; seed < 5; ++seed) {
            MatrixGameConfig cfg;
            cfg.steps = 60000;
            cfg.seed = seed;
            const auto res = train_matrix_nfsp(payoff, cfg);
            INFO("seed ", seed, " row ", res.row_policy[0], " col ", res.col_policy[0]);
            CHECK(total_variation(res.row_policy, row_star) <= 0.1);
            CHECK(total_variation(res.col_policy, half) <= 0.1);
        }
    }

    SUBCASE("degenerate payoff shapes are rejected") {
        CHECK_THROWS_AS(train_matrix_nfsp(Eigen::MatrixXd::Zero(1, 2), MatrixGameConfig{}),
                        ShapeError);
    }
}

TEST_CASE("training is a pure function of config and seed") {
    auto ds = macro_driven_dataset(60);
    auto cfg = small_config(5);
    cfg.eta = 0.5;
    cfg.perturb_eps = 0.5;

    auto env_a = make_env(ds);
    NfspTrainer a(cfg, env_a);
    a.train(env_a);
    auto env_b = make_env(ds);
    NfspTrainer b(cfg, env_b);
    b.train(env_b);

    REQUIRE(a.log().size() == b.log().size());
    for (size_t i = 0; i < a.log().size(); ++i) {
        CHECK(a.log()[i].step == b.log()[i].step);
        // bitwise-equal losses; NaN placeholders must match in kind
        auto same = [](double x, double y) {
            return (std::isnan(x) && std::isnan(y)) || x == y;
        };
        CHECK(same(a.log()[i].loss_q, b.log()[i].loss_q));
        CHECK(same(a.log()[i].loss_avg, b.log()[i].loss_avg));
        CHECK(same(a.log()[i].loss_qbn, b.log()[i].loss_qbn));
        CHECK(same(a.log()[i].loss_adv, b.log()[i].loss_adv));
    }
    CHECK(a.qnet().params().to_vector() == b.qnet().params().to_vector());
    CHECK(a.avg_policy().params().to_vector() == b.avg_policy().params().to_vector());
    CHECK(a.adversary().params().to_vector() == b.adversary().params().to_vector());
    CHECK(a.qbn().params().to_vector() == b.qbn().params().to_vector());

    const auto& ca = a.agent().circular();
    const auto& cb = b.agent().circular();
    REQUIRE(ca.size() == cb.size());
    for (size_t i = 0; i < ca.size(); i += 37) {
        CHECK(ca[i].action == cb[i].action);
        CHECK(ca[i].reward == cb[i].reward);
        CHECK((ca[i].s.array() == cb[i].s.array()).all());
    }

    SUBCASE("zero-sum accounting pairs the buffers step by step") {
        const auto& adv = a.adversary_buffer();
        REQUIRE(adv.size() == ca.size());
        for (size_t i = 0; i < adv.size(); ++i)
            CHECK(adv[i].trader_reward == ca[i].reward);
    }

    SUBCASE("routing and mixing laws hold on the trainer") {
        CHECK(a.agent().reservoir().items_seen() == a.best_response_steps());
        const double freq = static_cast<double>(a.best_response_steps()) / 300.0;
        CHECK(std::abs(freq - 0.5) < 3.0 * std::sqrt(0.25 / 300.0));
    }
}

TEST_CASE("trainer branch extremes route the reservoir") {
    auto ds = macro_driven_dataset(60);

    auto cfg = small_config(6);
    cfg.total_steps = 80;
    cfg.eta = 1.0;
    auto env = make_env(ds);
    NfspTrainer always_br(cfg, env);
    always_br.train(env);
    CHECK(always_br.agent().reservoir().items_seen() == 80);

    cfg.eta = 0.0;
    auto env2 = make_env(ds);
    NfspTrainer never_br(cfg, env2);
    never_br.train(env2);
    CHECK(never_br.agent().reservoir().items_seen() == 0);
}

TEST_CASE("belief pipeline engages during training") {
    auto ds = macro_driven_dataset(60);
    auto cfg = small_config(7);
    cfg.total_steps = 60;
    auto env = make_env(ds);
    NfspTrainer trainer(cfg, env);
    CHECK_FALSE(trainer.qbn().trained());
    trainer.train(env);
    CHECK(trainer.qbn().trained());

    bool saw_qbn_loss = false;
    for (const auto& row : trainer.log())
        if (std::isfinite(row.loss_qbn)) saw_qbn_loss = true;
    CHECK(saw_qbn_loss);

    const auto belief = trainer.qbn().infer(env.observation_window());
    REQUIRE(belief.q.size() == belief::kQuantiles);
    for (int k = 1; k < belief.q.size(); ++k) CHECK(belief.q[k] >= belief.q[k - 1]);
    for (int k = 0; k < belief.q.size(); ++k) CHECK(std::isfinite(belief.q[k]));

    SUBCASE("training log round-trips through csv") {
        std::stringstream ss;
        trainer.write_log(ss);
        std::string header;
        std::getline(ss, header);
        CHECK(header == "step,loss_q,loss_avg,loss_qbn,loss_adv,eval_return");
        size_t rows = 0;
        for (std::string line; std::getline(ss, line);) ++rows;
        CHECK(rows == trainer.log().size());
    }
}

TEST_CASE("a non-finite loss halts training with state intact") {
    auto ds = macro_driven_dataset(60);
    auto cfg = small_config(8);
    cfg.q_warmup = 10;
    auto env = make_env(ds);
    NfspTrainer trainer(cfg, env);
    trainer.qnet().params().items().front()->value(0, 0) =
        std::numeric_limits<double>::quiet_NaN();

    const auto report = trainer.train(env);
    CHECK(report.halted_nonfinite);
    CHECK(report.diagnostic.find("loss_q") != std::string::npos);
    CHECK(report.steps_run == 11);  // first Q update after the 10-step warmup
    CHECK(report.steps_run < cfg.total_steps);
    CHECK(trainer.log().size() >= 1);
}

TEST_CASE("greedy evaluation reproduces environment anchors") {
    auto ds = macro_driven_dataset(60);

    SUBCASE("uniform policy ties to Long and matches a manual rollout") {
        agents::AvgPolicyConfig pcfg;
        auto env = make_env(ds, 0.001);
        pcfg.state_dim = env.state_dim();
        pcfg.belief_dim = 0;
        pcfg.hidden = {};
        pcfg.seed = 9;
        agents::AvgPolicyNetwork policy(pcfg);

        const auto rep1 = evaluate_policy(policy, nullptr, env, 1);
        const auto rep2 = evaluate_policy(policy, nullptr, env, 1);
        CHECK(rep1.net_values == rep2.net_values);
        CHECK(rep1.arr == rep2.arr);
        CHECK(rep1.mdd == rep2.mdd);
        CHECK(rep1.trades == rep2.trades);

        auto env2 = make_env(ds, 0.001);
        env2.reset();
        while (!env2.done()) env2.step(market_env::Action::Long);
        CHECK(rep1.net_values.back() == doctest::Approx(env2.net_value()).epsilon(1e-12));
        CHECK(rep1.trades == 1);
    }

    SUBCASE("an always-flat policy reports zero ARR and MDD with SR undefined") {
        agents::AvgPolicyConfig pcfg;
        auto env = make_env(ds, 0.001);
        pcfg.state_dim = env.state_dim();
        pcfg.belief_dim = 0;
        pcfg.hidden = {};
        pcfg.lr = 1e-1;
        pcfg.seed = 10;
        agents::AvgPolicyNetwork policy(pcfg);

        std::vector<agents::PolicySample> flats;
        env.reset();
        while (!env.done()) {
            agents::PolicySample ps;
            ps.s = env.current_state();
            ps.b = Eigen::VectorXd(0);
            ps.action = static_cast<int>(market_env::Action::Flat);
            flats.push_back(ps);
            env.step(market_env::Action::Flat);
        }
        std::vector<const agents::PolicySample*> view;
        for (const auto& f : flats) view.push_back(&f);
        for (int i = 0; i < 200; ++i) policy.supervised_update(view);

        const auto rep = evaluate_policy(policy, nullptr, env, 2);
        CHECK(rep.arr == 0.0);
        CHECK(rep.mdd == 0.0);
        CHECK(std::isnan(rep.sr));
        CHECK(rep.trades == 0);
        for (double v : rep.net_values) CHECK(v == 1.0);
    }

    SUBCASE("shape mismatches are rejected") {
        auto env = make_env(ds);
        agents::AvgPolicyConfig pcfg;
        pcfg.state_dim = env.state_dim() + 1;
        pcfg.hidden = {};
        agents::AvgPolicyNetwork wrong_state(pcfg);
        CHECK_THROWS_AS(evaluate_policy(wrong_state, nullptr, env, 1), ConfigError);

        pcfg.state_dim = env.state_dim();
        pcfg.belief_dim = 3;
        agents::AvgPolicyNetwork wrong_belief(pcfg);
        CHECK_THROWS_AS(evaluate_policy(wrong_belief, nullptr, env, 1), ConfigError);

        agents::AvgPolicyConfig ok = pcfg;
        ok.belief_dim = 0;
        agents::AvgPolicyNetwork fine(ok);
        CHECK_THROWS_AS(evaluate_policy(fine, nullptr, env, 0), ConfigError);
    }
}

TEST_CASE("a trained adversary hurts a macro-following trader") {
    auto ds = macro_driven_dataset(46);
    const double kEps = 2.5;

    auto macro_follower = [](const Eigen::VectorXd& s) {
        return s[kMacroSlot] > 0.0 ? market_env::Action::Long : market_env::Action::Short;
    };

    auto rollout = [&](market_env::TradingEnv& env, auto&& pick_index,
                       agents::AdversaryQNetwork& adv, double eps) {
        env.reset();
        double total = 0.0;
        while (!env.done()) {
            const int idx = pick_index(env.current_state());
            env.set_perturbation(adv.alpha(idx), eps);
            total += env.step(macro_follower(env.current_state())).reward;
        }
        return total;
    };

    std::vector<double> gaps;
    double untrained_gap = 1.0;
    for (uint64_t seed = 0; seed < 8; ++seed) {
        auto env = make_env(ds);
        agents::AdversaryConfig acfg;
        acfg.state_dim = env.state_dim();
        acfg.macro_dim = 1;
        acfg.hidden = {8};
        acfg.lr = 3e-3;
        acfg.seed = seed;
        agents::AdversaryQNetwork adv(acfg);
        REQUIRE(adv.catalog_size() == 3);

        agents::CircularBuffer<agents::AdversarySample> buf(2000);
        RngStream train_rng(seed, "adv-fixture-train");
        env.reset();
        for (int step = 0; step < 1200; ++step) {
            if (env.done()) env.reset();
            const Eigen::VectorXd s = env.current_state();
            const int idx = adv.act_epsilon_greedy(s, 0.2, train_rng);
            env.set_perturbation(adv.alpha(idx), kEps);
            const auto res = env.step(macro_follower(env.current_state()));
            agents::AdversarySample as;
            as.s = s;
            as.pert_index = idx;
            as.trader_reward = res.reward;
            buf.push(as);
            if ((step + 1) % 4 == 0 && buf.size() >= 32)
                adv.update(buf.sample(32, train_rng));
        }

        const double trained =
            rollout(env, [&](const Eigen::VectorXd& s) { return adv.greedy_index(s); },
                    adv, kEps);
        RngStream uni(seed, "adv-fixture-uniform");
        const double uniform = rollout(
            env, [&](const Eigen::VectorXd&) { return static_cast<int>(uni.uniform_int(3)); },
            adv, kEps);
        gaps.push_back(uniform - trained);

        if (seed == 0) {
            // with the threat disabled the adversary's choices change nothing
            const double greedy_off = rollout(
                env, [&](const Eigen::VectorXd& s) { return adv.greedy_index(s); }, adv,
                0.0);
            const double zero_index =
                rollout(env, [&](const Eigen::VectorXd&) { return 0; }, adv, 0.0);
            CHECK(greedy_off == zero_index);
            untrained_gap = greedy_off - zero_index;
        }
    }

    CHECK(untrained_gap == 0.0);
    int positive = 0;
    for (double g : gaps) positive += g > 0.0 ? 1 : 0;
    INFO("positive gaps: ", positive, " of 8");
    CHECK(positive >= 7);
    CHECK(evalkit::wilcoxon_directional(gaps) < 0.05);
}
