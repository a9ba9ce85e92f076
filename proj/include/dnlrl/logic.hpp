#pragma once

// Differentiable fuzzy conjunction / disjunction layers.
//
// A conjunction neuron with memberships m over inputs x computes
//     prod_i (1 - m_i (1 - x_i))
// and a disjunction neuron computes
//     1 - prod_i (1 - m_i x_i).
// Memberships are sigmoid(c * raw), clamped to [kMembershipFloor, 1 - kMembershipFloor].

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "dnlrl/errors.hpp"

namespace dnlrl {

inline constexpr double kMembershipFloor = 1e-7;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
Scalar sigmoid(Scalar z)
{
    using std::exp;
    if (z >= Scalar(0)) {
        return Scalar(1) / (Scalar(1) + exp(-z));
    }
    const Scalar e = exp(z);
    return e / (Scalar(1) + e);
}

/// Membership values sigmoid(c * raw) for any dense Eigen expression.
template <typename Derived>
auto membership(const Eigen::MatrixBase<Derived>& raw, typename Derived::Scalar c)
{
    using Scalar = typename Derived::Scalar;
    const Scalar lo(kMembershipFloor);
    const Scalar hi = Scalar(1) - lo;
    return raw.unaryExpr([c, lo, hi](Scalar w) {
        const Scalar m = sigmoid(c * w);
        return m < lo ? lo : (m > hi ? hi : m);
    }).eval();
}

/// d membership / d raw at membership value m. Uses the sigmoid identity at the
/// (possibly clamped) value so saturated weights keep a nonzero gradient.
template <typename Scalar>
Scalar membership_slope(Scalar m, Scalar c)
{
    return c * m * (Scalar(1) - m);
}

template <typename DerivedX, typename DerivedM>
typename DerivedX::Scalar neural_conjunction(const Eigen::MatrixBase<DerivedX>& x,
                                             const Eigen::MatrixBase<DerivedM>& m)
{
    if (x.size() != m.size()) {
        throw DimensionError("neural_conjunction: " + std::to_string(x.size()) + " inputs vs "
                             + std::to_string(m.size()) + " memberships");
    }
    using Scalar = typename DerivedX::Scalar;
    Scalar out(1);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        out *= Scalar(1) - m(i) * (Scalar(1) - x(i));
    }
    return out;
}

template <typename DerivedX, typename DerivedM>
typename DerivedX::Scalar neural_disjunction(const Eigen::MatrixBase<DerivedX>& x,
                                             const Eigen::MatrixBase<DerivedM>& m)
{
    if (x.size() != m.size()) {
        throw DimensionError("neural_disjunction: " + std::to_string(x.size()) + " inputs vs "
                             + std::to_string(m.size()) + " memberships");
    }
    using Scalar = typename DerivedX::Scalar;
    Scalar keep(1);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        keep *= Scalar(1) - m(i) * x(i);
    }
    return Scalar(1) - keep;
}

/// One action predicate: N_p conjunction neurons over N_e atoms feeding a
/// single disjunction neuron.
template <typename Scalar = double>
struct DnlNetwork {
    MatrixX<Scalar> conj_raw; // N_p x N_e
    VectorX<Scalar> disj_raw; // N_p
    Scalar c = Scalar(6);

    Eigen::Index rules() const { return conj_raw.rows(); }
    Eigen::Index atoms() const { return conj_raw.cols(); }

    MatrixX<Scalar> conj_membership() const { return membership(conj_raw, c); }
    VectorX<Scalar> disj_membership() const { return membership(disj_raw, c); }
};

struct WeightInit {
    double mean = -0.5;
    double stddev = 0.3;
};

template <typename Scalar = double>
DnlNetwork<Scalar> init_weights(Eigen::Index n_p, Eigen::Index n_e, std::uint64_t seed,
                                Scalar c = Scalar(6), WeightInit init = {})
{
    if (n_p < 1 || n_e < 1) {
        throw ConfigError("init_weights: n_p and n_e must be >= 1");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(init.mean, init.stddev);
    DnlNetwork<Scalar> net;
    net.c = c;
    net.conj_raw.resize(n_p, n_e);
    net.disj_raw.resize(n_p);
    for (Eigen::Index j = 0; j < n_p; ++j) {
        for (Eigen::Index i = 0; i < n_e; ++i) {
            net.conj_raw(j, i) = Scalar(gauss(rng));
        }
    }
    for (Eigen::Index j = 0; j < n_p; ++j) {
        net.disj_raw(j) = Scalar(gauss(rng));
    }
    return net;
}

/// Intermediate values of a batched forward pass, reused by backward().
template <typename Scalar = double>
struct DnlForward {
    MatrixX<Scalar> conj_m; // N_p x N_e
    VectorX<Scalar> disj_m; // N_p
    MatrixX<Scalar> conj_out; // b x N_p
    VectorX<Scalar> out;      // b
};

template <typename Scalar = double>
struct DnlGradient {
    MatrixX<Scalar> conj_raw;
    VectorX<Scalar> disj_raw;
    MatrixX<Scalar> input; // b x N_e, d loss / d input matrix

    void set_zero_like(const DnlNetwork<Scalar>& net, Eigen::Index batch)
    {
        conj_raw.setZero(net.rules(), net.atoms());
        disj_raw.setZero(net.rules());
        input.setZero(batch, net.atoms());
    }
};

/// Evaluates the action predicate on every row of the input matrix.
template <typename Scalar, typename Derived>
DnlForward<Scalar> forward(const DnlNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& input)
{
    if (input.cols() != net.atoms()) {
        throw DimensionError("dnl forward: input has " + std::to_string(input.cols())
                             + " columns, network expects " + std::to_string(net.atoms()));
    }
    DnlForward<Scalar> f;
    f.conj_m = net.conj_membership();
    f.disj_m = net.disj_membership();
    const Eigen::Index b = input.rows();
    const Eigen::Index n_p = net.rules();
    const Eigen::Index n_e = net.atoms();
    f.conj_out.resize(b, n_p);
    f.out.resize(b);
    for (Eigen::Index r = 0; r < b; ++r) {
        Scalar keep(1);
        for (Eigen::Index j = 0; j < n_p; ++j) {
            Scalar z(1);
            for (Eigen::Index i = 0; i < n_e; ++i) {
                z *= Scalar(1) - f.conj_m(j, i) * (Scalar(1) - input(r, i));
            }
            f.conj_out(r, j) = z;
            keep *= Scalar(1) - f.disj_m(j) * z;
        }
        f.out(r) = Scalar(1) - keep;
    }
    return f;
}

/// Reverse pass. `d_out` is d loss / d out per batch row. Gradients are
/// accumulated into `grad`, which must already be shaped (see set_zero_like).
/// Products excluding one factor use prefix/suffix products, no division.
template <typename Scalar, typename DerivedI, typename DerivedG>
void backward(const DnlNetwork<Scalar>& net, const Eigen::MatrixBase<DerivedI>& input,
              const DnlForward<Scalar>& f, const Eigen::MatrixBase<DerivedG>& d_out,
              DnlGradient<Scalar>& grad)
{
    const Eigen::Index b = input.rows();
    const Eigen::Index n_p = net.rules();
    const Eigen::Index n_e = net.atoms();
    if (d_out.size() != b) {
        throw DimensionError("dnl backward: gradient length does not match batch");
    }

    MatrixX<Scalar> d_conj_m = MatrixX<Scalar>::Zero(n_p, n_e);
    VectorX<Scalar> d_disj_m = VectorX<Scalar>::Zero(n_p);
    VectorX<Scalar> rule_prefix(n_p + 1), rule_suffix(n_p + 1), rule_factor(n_p);
    VectorX<Scalar> atom_prefix(n_e + 1), atom_suffix(n_e + 1), atom_factor(n_e);

    for (Eigen::Index r = 0; r < b; ++r) {
        const Scalar g = d_out(r);
        if (g == Scalar(0)) {
            continue;
        }
        // disjunction: out = 1 - prod_j (1 - md_j z_j)
        for (Eigen::Index j = 0; j < n_p; ++j) {
            rule_factor(j) = Scalar(1) - f.disj_m(j) * f.conj_out(r, j);
        }
        rule_prefix(0) = Scalar(1);
        for (Eigen::Index j = 0; j < n_p; ++j) {
            rule_prefix(j + 1) = rule_prefix(j) * rule_factor(j);
        }
        rule_suffix(n_p) = Scalar(1);
        for (Eigen::Index j = n_p; j-- > 0;) {
            rule_suffix(j) = rule_suffix(j + 1) * rule_factor(j);
        }
        for (Eigen::Index j = 0; j < n_p; ++j) {
            const Scalar others = rule_prefix(j) * rule_suffix(j + 1);
            d_disj_m(j) += g * f.conj_out(r, j) * others;
            const Scalar gz = g * f.disj_m(j) * others;
            if (gz == Scalar(0)) {
                continue;
            }
            // conjunction: z = prod_i (1 - m_i (1 - x_i))
            for (Eigen::Index i = 0; i < n_e; ++i) {
                atom_factor(i) = Scalar(1) - f.conj_m(j, i) * (Scalar(1) - input(r, i));
            }
            atom_prefix(0) = Scalar(1);
            for (Eigen::Index i = 0; i < n_e; ++i) {
                atom_prefix(i + 1) = atom_prefix(i) * atom_factor(i);
            }
            atom_suffix(n_e) = Scalar(1);
            for (Eigen::Index i = n_e; i-- > 0;) {
                atom_suffix(i) = atom_suffix(i + 1) * atom_factor(i);
            }
            for (Eigen::Index i = 0; i < n_e; ++i) {
                const Scalar rest = gz * atom_prefix(i) * atom_suffix(i + 1);
                d_conj_m(j, i) -= rest * (Scalar(1) - input(r, i));
                grad.input(r, i) += rest * f.conj_m(j, i);
            }
        }
    }

    for (Eigen::Index j = 0; j < n_p; ++j) {
        for (Eigen::Index i = 0; i < n_e; ++i) {
            grad.conj_raw(j, i) += d_conj_m(j, i) * membership_slope(f.conj_m(j, i), net.c);
        }
        grad.disj_raw(j) += d_disj_m(j) * membership_slope(f.disj_m(j), net.c);
    }
    if (!grad.conj_raw.allFinite() || !grad.disj_raw.allFinite()) {
        throw NumericError("dnl backward: non-finite gradient");
    }
}

} // namespace dnlrl
