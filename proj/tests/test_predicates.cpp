#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "dnlrl/environments.hpp"
#include "dnlrl/predicates.hpp"
#include "oracles.hpp"

using namespace dnlrl;
using Catch::Approx;

namespace {

FeatureSchema one_feature(double low, double high, int bins)
{
    FeatureSchema s;
    s.continuous.push_back({"X", low, high, bins});
    return s;
}

} // namespace

TEST_CASE("boundary predicate values")
{
    CHECK(eval_gt(0.3, 0.3, 20.0) == Approx(0.5));
    CHECK(eval_lt(0.3, 0.3, 20.0) == Approx(0.5));
    CHECK(eval_gt(0.8, 0.5, 20.0) == Approx(oracle::logistic(6.0)));
    CHECK(eval_gt(0.8, 0.5, 20.0) == Approx(0.9975).margin(5e-5));
    CHECK(eval_lt(0.8, 1.0, 20.0) == Approx(0.9820).margin(5e-5));
    // x* = 0.8 against bin edges {0.5, 1.0}: above the first, below the second
    CHECK(eval_gt(0.8, 0.5, 20.0) > 0.99);
    CHECK(eval_gt(0.8, 1.0, 20.0) < 0.02);
}

TEST_CASE("gt and lt are complements and monotone")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng), b = u(rng), c = 1.0 + std::abs(u(rng)) * 10.0;
        REQUIRE(eval_gt(x, b, c) + eval_lt(x, b, c) == Approx(1.0).epsilon(1e-12));
        const double dx = std::abs(u(rng));
        REQUIRE(eval_gt(x + dx, b, c) >= eval_gt(x, b, c));
        REQUIRE(eval_lt(x + dx, b, c) <= eval_lt(x, b, c));
    }
}

TEST_CASE("discrete one-hot encoding")
{
    CHECK(encode_discrete(true) == std::pair{1.0, 0.0});
    CHECK(encode_discrete(false) == std::pair{0.0, 1.0});
}

TEST_CASE("equal-width binning")
{
    const auto bank = init_equal_width(one_feature(-2.0, 2.0, 4));
    REQUIRE(bank.sources.size() == 1);
    const auto& s = bank.sources[0];
    const double lows[] = {-2, -1, 0, 1};
    const double highs[] = {-1, 0, 1, 2};
    for (int i = 0; i < 4; ++i) {
        CHECK(s.greater_than(i) == Approx(lows[i]));
        CHECK(s.less_than(i) == Approx(highs[i]));
        CHECK(s.greater_than(i) < s.less_than(i));
    }
    CHECK_THROWS_AS(init_equal_width(one_feature(-2.0, 2.0, 0)), ConfigError);
    CHECK_THROWS_AS(init_equal_width(one_feature(1.0, 1.0, 2)), ConfigError);
}

TEST_CASE("schema validation reports every problem")
{
    FeatureSchema s;
    s.continuous.push_back({"A", 1.0, 0.0, 0});
    s.continuous.push_back({"A", 0.0, 1.0, 2});
    try {
        s.validate();
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("low must be < high") != std::string::npos);
        CHECK(msg.find("bins must be >= 1") != std::string::npos);
        CHECK(msg.find("duplicate") != std::string::npos);
    }
}

TEST_CASE("input width follows the atom-count formula")
{
    const auto cart = environment_info("cartpole").schema;
    const auto lander = environment_info("lunar_lander").schema;
    CHECK(init_equal_width(cart).atoms() == 2 * 4 * 4);
    CHECK(init_equal_width(lander).atoms() == 2 * 3 * 6 + 2 * 2);

    TransformKB kb{{{"PoleAngle", "sine"}}};
    const auto bank = init_equal_width(cart, kb);
    CHECK(bank.atoms() == 40);

    Eigen::MatrixXd state = Eigen::MatrixXd::Zero(1, 4);
    const auto im = build_input_matrix(process_batch(state, cart, kb), bank);
    CHECK(im.values.rows() == 1);
    CHECK(im.values.cols() == 40);
    CHECK(im.labels.size() == 40);

    // mixed bin counts
    FeatureSchema mixed;
    mixed.continuous = {{"A", 0, 1, 2}, {"B", 0, 1, 5}};
    mixed.discrete = {{"D"}};
    CHECK(init_equal_width(mixed).atoms() == 2 * (2 + 5) + 2);
}

TEST_CASE("column order: features, then transforms, then discrete pairs")
{
    FeatureSchema s;
    s.continuous = {{"A", 0, 1, 2}, {"B", -1, 1, 1}};
    s.discrete = {{"Leg"}};
    TransformKB kb{{{"B", "square"}}};
    const auto labels = init_equal_width(s, kb).labels();
    REQUIRE(labels.size() == 2 * 2 + 2 * 1 + 2 * 1 + 2);
    CHECK(labels[0].name == "A");
    CHECK(labels[0].kind == AtomKind::Greater);
    CHECK(labels[1].kind == AtomKind::Less);
    CHECK(labels[2].name == "A");
    CHECK(labels[2].bin == 1);
    CHECK(labels[4].name == "B");
    CHECK(labels[6].name == "BSquare");
    CHECK(labels[8].name == "Leg");
    CHECK(labels[8].kind == AtomKind::True);
    CHECK(labels[9].kind == AtomKind::False);
}

TEST_CASE("input matrix entries lie in [0, 1] and discrete atoms are one-hot")
{
    const auto schema = environment_info("lunar_lander").schema;
    const auto bank = init_equal_width(schema);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 5.0);
    Eigen::MatrixXd states(50, 8);
    for (int r = 0; r < 50; ++r) {
        for (int c = 0; c < 6; ++c) {
            states(r, c) = g(rng);
        }
        states(r, 6) = r % 2;
        states(r, 7) = (r / 2) % 2;
    }
    const auto in = build_input_values(process_batch(states, schema, {}), bank);
    CHECK(in.minCoeff() >= 0.0);
    CHECK(in.maxCoeff() <= 1.0);
    const auto n = in.cols();
    for (int r = 0; r < 50; ++r) {
        CHECK(in(r, n - 4) == double(r % 2));
        CHECK(in(r, n - 3) == double(1 - r % 2));
        CHECK(in(r, n - 2) == double((r / 2) % 2));
        CHECK(in(r, n - 1) == double(1 - (r / 2) % 2));
    }
}

TEST_CASE("transform predicates")
{
    const auto& sine = lookup_transform("sine");
    const auto& square = lookup_transform("square");
    CHECK_THROWS_AS(lookup_transform("tanh"), ConfigError);

    TransformKB kb{{{"X", "square"}}};
    const auto bank = init_equal_width(one_feature(-3.0, 3.0, 3), kb);
    REQUIRE(bank.sources.size() == 2);
    const auto& sq = bank.sources[1];
    CHECK(sq.name == "XSquare");
    // square over [-3, 3] covers [0, 9]
    CHECK(sq.greater_than(0) == Approx(0.0));
    CHECK(sq.less_than(2) == Approx(9.0));
    CHECK(eval_transform_predicates(-2.0, square, sq, 20.0) == eval_transform_predicates(2.0, square, sq, 20.0));

    TransformKB skb{{{"X", "sine"}}};
    const auto sbank = init_equal_width(one_feature(-3.0, 3.0, 2), skb);
    const auto& ss = sbank.sources[1];
    CHECK(ss.greater_than(0) == Approx(-1.0));
    CHECK(ss.less_than(1) == Approx(1.0));
    const auto at0 = eval_transform_predicates(0.0, sine, ss, 20.0);
    for (Eigen::Index i = 0; i < ss.bins(); ++i) {
        CHECK(at0(2 * i) == Approx(eval_gt(0.0, ss.greater_than(i), 20.0)));
        CHECK(at0(2 * i + 1) == Approx(eval_lt(0.0, ss.less_than(i), 20.0)));
    }

    const auto cart = environment_info("cartpole").schema;
    const auto labels = init_equal_width(cart, TransformKB{{{"PoleAngle", "sine"}}}).labels();
    CHECK(std::any_of(labels.begin(), labels.end(), [](const AtomLabel& l) { return l.name == "PoleAngleSine"; }));

    Eigen::VectorXd raw(1);
    raw << M_PI / 2;
    const auto ps = process_state(raw, one_feature(-4, 4, 2), skb);
    REQUIRE(ps.values.size() == 2);
    CHECK(ps.values(0) == Approx(M_PI / 2));
    CHECK(ps.values(1) == Approx(1.0));

    TransformKB unknown{{{"Nope", "sine"}}};
    CHECK_THROWS_AS(unknown.validate(one_feature(0, 1, 1)), ConfigError);
}

TEST_CASE("processing checks arity and finiteness")
{
    const auto schema = environment_info("cartpole").schema;
    CHECK_THROWS_AS(process_state(Eigen::VectorXd::Zero(3), schema, {}), DimensionError);
    Eigen::VectorXd bad = Eigen::VectorXd::Zero(4);
    bad(2) = std::nan("");
    CHECK_THROWS_AS(process_state(bad, schema, {}), NumericError);
    const auto ps = process_state(Eigen::VectorXd::Zero(4), schema, {});
    CHECK(ps.values == Eigen::VectorXd::Zero(4));
}

TEST_CASE("crisp limit: exactly one initial bin holds inside the range")
{
    auto bank = init_equal_width(one_feature(-1.0, 1.0, 4));
    const double c = 1e4;
    const auto& s = bank.sources[0];
    int checked = 0;
    for (double x = -0.99; x < 1.0; x += 0.01) {
        // skip points within 1e-3 of an edge
        const double pos = (x + 1.0) / 0.5;
        if (std::abs(pos - std::round(pos)) < 2e-3) {
            continue;
        }
        int on = 0;
        for (Eigen::Index i = 0; i < s.bins(); ++i) {
            const double both = eval_gt(x, s.greater_than(i), c) * eval_lt(x, s.less_than(i), c);
            if (both > 0.999) {
                ++on;
            } else {
                REQUIRE(both < 1e-3);
            }
        }
        REQUIRE(on == 1);
        ++checked;
    }
    CHECK(checked > 150);
}

TEST_CASE("bound gradients match finite differences")
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    FeatureSchema schema;
    schema.continuous = {{"A", -1, 1, 3}, {"B", -2, 2, 2}};
    schema.discrete = {{"D"}};
    TransformKB kb{{{"A", "cube"}}};
    for (int trial = 0; trial < 20; ++trial) {
        auto bank = init_equal_width(schema, kb, 1.0 + trial);
        for (auto& s : bank.sources) {
            for (Eigen::Index i = 0; i < s.bins(); ++i) {
                s.greater_than(i) += 0.2 * u(rng);
                s.less_than(i) += 0.2 * u(rng);
            }
        }
        Eigen::MatrixXd raw(4, 3);
        for (int r = 0; r < 4; ++r) {
            raw(r, 0) = u(rng);
            raw(r, 1) = 2 * u(rng);
            raw(r, 2) = r % 2;
        }
        const auto batch = process_batch(raw, schema, kb);
        Eigen::MatrixXd coef(4, bank.atoms());
        for (Eigen::Index k = 0; k < coef.size(); ++k) {
            coef.data()[k] = u(rng);
        }
        auto loss = [&] { return (build_input_values(batch, bank).array() * coef.array()).sum(); };
        auto g = BankGradient::zeros_like(bank);
        backward(batch, bank, coef, g);
        for (std::size_t s = 0; s < bank.sources.size(); ++s) {
            for (Eigen::Index i = 0; i < bank.sources[s].bins(); ++i) {
                REQUIRE(oracle::fd_close(g.greater_than[s](i),
                                         oracle::central_difference(loss, bank.sources[s].greater_than(i))));
                REQUIRE(oracle::fd_close(g.less_than[s](i),
                                         oracle::central_difference(loss, bank.sources[s].less_than(i))));
            }
        }
    }
}
