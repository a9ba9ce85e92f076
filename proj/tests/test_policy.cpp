#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "dnlrl/environments.hpp"
#include "dnlrl/policy.hpp"
#include "oracles.hpp"

using namespace dnlrl;
using Catch::Approx;

namespace {

DnlPolicy cartpole_policy(std::uint64_t seed, double floor = 1e-6)
{
    const auto info = environment_info("cartpole");
    PolicyConfig cfg;
    cfg.floor = floor;
    return DnlPolicy(info.schema, {}, info.actions, cfg, seed);
}

Eigen::MatrixXd random_states(int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd s(n, 4);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        s.data()[i] = g(rng);
    }
    s.col(2) *= 0.1;
    return s;
}

} // namespace

TEST_CASE("normalization examples")
{
    Eigen::MatrixXd t(3, 2);
    t << 0.8, 0.2, 0.0, 0.0, 1.0, 1.0;
    const auto p = normalize_truth(t, 1e-6);
    CHECK(p(0, 0) == Approx(0.8).margin(1e-5));
    CHECK(p(0, 1) == Approx(0.2).margin(1e-5));
    CHECK(p(1, 0) == Approx(0.5));
    CHECK(p(1, 1) == Approx(0.5));
    CHECK(p(2, 0) == Approx(0.5));
    // exact form of the floor
    CHECK(p(0, 0) == Approx((0.8 + 1e-6) / (1.0 + 2e-6)).epsilon(1e-14));
}

TEST_CASE("policy outputs are distributions")
{
    const auto pol = cartpole_policy(3);
    const auto out = pol.evaluate(random_states(200, 4));
    REQUIRE(out.probs.rows() == 200);
    REQUIRE(out.probs.cols() == 2);
    CHECK(out.probs.minCoeff() > 0.0);
    CHECK(out.truth.minCoeff() >= 0.0);
    CHECK(out.truth.maxCoeff() <= 1.0);
    for (Eigen::Index r = 0; r < 200; ++r) {
        REQUIRE(out.probs.row(r).sum() == Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("batched evaluation matches row-by-row evaluation")
{
    const auto pol = cartpole_policy(5);
    const auto states = random_states(17, 6);
    const auto all = pol.evaluate(states);
    for (Eigen::Index r = 0; r < states.rows(); ++r) {
        const auto one = pol.evaluate(states.row(r));
        REQUIRE((one.probs.row(0) - all.probs.row(r)).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("policy construction is seeded")
{
    const auto a = cartpole_policy(11), b = cartpole_policy(11), c = cartpole_policy(12);
    const auto s = random_states(5, 1);
    CHECK(a.evaluate(s).probs == b.evaluate(s).probs);
    CHECK(a.evaluate(s).probs != c.evaluate(s).probs);
    CHECK(a.bank().atoms() == 32);
    CHECK(a.networks().size() == 2);
    CHECK(a.networks()[0].conj_raw.rows() == 4);
}

TEST_CASE("greedy selection breaks ties toward the lowest index")
{
    std::mt19937_64 rng(1);
    Eigen::RowVectorXd p(2);
    p << 0.5, 0.5;
    CHECK(sample_action(p, SampleMode::Greedy, rng) == 0);
    Eigen::RowVectorXd q(4);
    q << 0.1, 0.4, 0.4, 0.1;
    CHECK(argmax_lowest(q) == 1);
    q << 0.1, 0.2, 0.3, 0.4;
    CHECK(sample_action(q, SampleMode::Greedy, rng) == 3);
}

TEST_CASE("stochastic sampling frequencies within 3 sigma")
{
    std::mt19937_64 rng(77);
    Eigen::RowVectorXd p(4);
    p << 0.1, 0.2, 0.3, 0.4;
    const int n = 100000;
    std::vector<int> counts(4, 0);
    for (int i = 0; i < n; ++i) {
        ++counts[sample_action(p, SampleMode::Stochastic, rng)];
    }
    for (int a = 0; a < 4; ++a) {
        const double sigma = std::sqrt(n * p(a) * (1.0 - p(a)));
        CHECK(std::abs(counts[a] - n * p(a)) <= 3.0 * sigma);
    }
}

TEST_CASE("policy gradients match finite differences")
{
    auto pol = cartpole_policy(9, 0.05);
    const auto states = random_states(6, 10);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd coef(6, 2);
    for (Eigen::Index i = 0; i < coef.size(); ++i) {
        coef.data()[i] = u(rng);
    }
    // nudge bounds off the equal-width grid so every bound matters
    for (auto& s : pol.bank().sources) {
        for (Eigen::Index i = 0; i < s.bins(); ++i) {
            s.greater_than(i) += 0.05 * u(rng);
            s.less_than(i) += 0.05 * u(rng);
        }
    }
    auto loss = [&] { return (pol.evaluate(states).probs.array() * coef.array()).sum(); };

    const auto f = pol.forward(states);
    const auto grad = pol.backward_probs(f, coef);
    auto views = pol.parameters();
    const auto gviews = grad.views();
    REQUIRE(views.size() == gviews.size());
    // bounds, then per action (conjunction, disjunction)
    REQUIRE(views.size() == 2 * pol.bank().sources.size() + 2 * 2);
    for (std::size_t v = 0; v < views.size(); ++v) {
        REQUIRE(views[v].size() == gviews[v].size());
        for (Eigen::Index i = 0; i < views[v].size(); i += 3) {
            const double fd = oracle::central_difference(loss, views[v].data()[i]);
            REQUIRE(oracle::fd_close(gviews[v].data()[i], fd));
        }
    }
}

TEST_CASE("truth gradients match finite differences")
{
    auto pol = cartpole_policy(19);
    const auto states = random_states(4, 20);
    Eigen::MatrixXd coef(4, 2);
    coef << 1, -2, 0.5, 3, -1, 1, 2, 0.25;
    auto loss = [&] { return (pol.evaluate(states).truth.array() * coef.array()).sum(); };
    const auto grad = pol.backward_truth(pol.forward(states), coef);
    auto views = pol.parameters();
    const auto gviews = grad.views();
    for (std::size_t v = 0; v < views.size(); ++v) {
        for (Eigen::Index i = 0; i < views[v].size(); i += 5) {
            const double fd = oracle::central_difference(loss, views[v].data()[i]);
            REQUIRE(oracle::fd_close(gviews[v].data()[i], fd));
        }
    }
}
