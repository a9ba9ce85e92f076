#pragma once

// Flat parameter views, Adam, and target-network averaging.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "dnlrl/errors.hpp"

namespace dnlrl {

using ParamView = Eigen::Map<Eigen::VectorXd>;
using ConstParamView = Eigen::Map<const Eigen::VectorXd>;

template <typename Derived>
ParamView flat(Eigen::PlainObjectBase<Derived>& m)
{
    return {m.data(), m.size()};
}

template <typename Derived>
ConstParamView flat(const Eigen::PlainObjectBase<Derived>& m)
{
    return {m.data(), m.size()};
}

inline double squared_norm(const std::vector<ConstParamView>& grads)
{
    double s = 0.0;
    for (const auto& g : grads) {
        s += g.squaredNorm();
    }
    return s;
}

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double max_grad_norm = 0.0; // 0 disables clipping
};

class Adam {
public:
    Adam() = default;
    explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

    const AdamConfig& config() const { return cfg_; }
    void set_lr(double lr) { cfg_.lr = lr; }
    long steps() const { return t_; }

    /// One descent step; params and grads are visited in the same order on
    /// every call.
    void step(std::vector<ParamView> params, const std::vector<ConstParamView>& grads)
    {
        if (params.size() != grads.size()) {
            throw DimensionError("adam: parameter and gradient lists differ in length");
        }
        if (m_.empty()) {
            for (const auto& p : params) {
                m_.push_back(Eigen::VectorXd::Zero(p.size()));
                v_.push_back(Eigen::VectorXd::Zero(p.size()));
            }
        }
        if (m_.size() != params.size()) {
            throw DimensionError("adam: parameter list changed shape");
        }
        double scale = 1.0;
        if (cfg_.max_grad_norm > 0.0) {
            const double norm = std::sqrt(squared_norm(grads));
            if (norm > cfg_.max_grad_norm) {
                scale = cfg_.max_grad_norm / norm;
            }
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            if (grads[k].size() != params[k].size() || m_[k].size() != params[k].size()) {
                throw DimensionError("adam: gradient shape mismatch");
            }
            m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * scale * grads[k];
            v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * (scale * grads[k]).cwiseAbs2();
            params[k].array() -= cfg_.lr * (m_[k].array() / bc1) / ((v_[k].array() / bc2).sqrt() + cfg_.eps);
        }
    }

    // state exposed for checkpointing
    std::vector<Eigen::VectorXd>& first_moments() { return m_; }
    std::vector<Eigen::VectorXd>& second_moments() { return v_; }
    const std::vector<Eigen::VectorXd>& first_moments() const { return m_; }
    const std::vector<Eigen::VectorXd>& second_moments() const { return v_; }
    void set_steps(long t) { t_ = t; }

private:
    AdamConfig cfg_;
    std::vector<Eigen::VectorXd> m_;
    std::vector<Eigen::VectorXd> v_;
    long t_ = 0;
};

/// target <- tau * online + (1 - tau) * target
inline void soft_update(std::vector<ParamView> target, const std::vector<ParamView>& online, double tau)
{
    if (target.size() != online.size()) {
        throw DimensionError("soft_update: parameter lists differ");
    }
    for (std::size_t k = 0; k < target.size(); ++k) {
        if (tau == 1.0) {
            target[k] = online[k];
        } else {
            target[k] = tau * online[k] + (1.0 - tau) * target[k];
        }
    }
}

inline std::vector<ConstParamView> as_const(const std::vector<ParamView>& views)
{
    std::vector<ConstParamView> out;
    out.reserve(views.size());
    for (const auto& v : views) {
        out.emplace_back(v.data(), v.size());
    }
    return out;
}

} // namespace dnlrl
