#pragma once

// Fully connected ReLU network used for critics and value baselines.
// Batches are row-major in the sense of one sample per row.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dnlrl/optim.hpp"

namespace dnlrl {

struct MlpGradient {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::RowVectorXd> biases;

    std::vector<ConstParamView> views() const;
};

class Mlp {
public:
    Mlp() = default;
    /// Glorot-uniform weights, zero biases. Inputs are standardized as
    /// (x - offset) * scale before the first layer.
    Mlp(int inputs, const std::vector<int>& hidden, int outputs, std::uint64_t seed);

    struct Forward {
        std::vector<Eigen::MatrixXd> activations; // input (normalized), hidden layers, output
    };

    int inputs() const { return static_cast<int>(weights_.front().rows()); }
    int outputs() const { return static_cast<int>(weights_.back().cols()); }

    void set_input_normalization(Eigen::RowVectorXd offset, Eigen::RowVectorXd scale);

    Eigen::MatrixXd predict(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
    Forward forward(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
    MlpGradient backward(const Forward& f, const Eigen::Ref<const Eigen::MatrixXd>& d_out) const;

    std::vector<ParamView> parameters();

    std::vector<Eigen::MatrixXd>& weights() { return weights_; }
    std::vector<Eigen::RowVectorXd>& biases() { return biases_; }
    const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
    const std::vector<Eigen::RowVectorXd>& biases() const { return biases_; }
    const Eigen::RowVectorXd& input_offset() const { return offset_; }
    const Eigen::RowVectorXd& input_scale() const { return scale_; }

private:
    std::vector<Eigen::MatrixXd> weights_; // in x out
    std::vector<Eigen::RowVectorXd> biases_;
    Eigen::RowVectorXd offset_;
    Eigen::RowVectorXd scale_;
};

} // namespace dnlrl
