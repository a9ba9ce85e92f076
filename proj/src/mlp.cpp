#include "dnlrl/mlp.hpp"

#include <cmath>
#include <random>

namespace dnlrl {

std::vector<ConstParamView> MlpGradient::views() const
{
    std::vector<ConstParamView> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.push_back(flat(weights[l]));
        out.push_back(flat(biases[l]));
    }
    return out;
}

Mlp::Mlp(int inputs, const std::vector<int>& hidden, int outputs, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<int> sizes{inputs};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(outputs);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const double limit = std::sqrt(6.0 / (sizes[l] + sizes[l + 1]));
        std::uniform_real_distribution<double> u(-limit, limit);
        Eigen::MatrixXd w(sizes[l], sizes[l + 1]);
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            for (Eigen::Index i = 0; i < w.rows(); ++i) {
                w(i, j) = u(rng);
            }
        }
        weights_.push_back(std::move(w));
        biases_.push_back(Eigen::RowVectorXd::Zero(sizes[l + 1]));
    }
    offset_ = Eigen::RowVectorXd::Zero(inputs);
    scale_ = Eigen::RowVectorXd::Ones(inputs);
}

void Mlp::set_input_normalization(Eigen::RowVectorXd offset, Eigen::RowVectorXd scale)
{
    if (offset.size() != inputs() || scale.size() != inputs()) {
        throw DimensionError("mlp: normalization width does not match inputs");
    }
    offset_ = std::move(offset);
    scale_ = std::move(scale);
}

Mlp::Forward Mlp::forward(const Eigen::Ref<const Eigen::MatrixXd>& x) const
{
    if (x.cols() != inputs()) {
        throw DimensionError("mlp: input has " + std::to_string(x.cols()) + " columns, expected "
                             + std::to_string(inputs()));
    }
    Forward f;
    f.activations.reserve(weights_.size() + 1);
    f.activations.push_back(((x.rowwise() - offset_).array().rowwise() * scale_.array()).matrix());
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Eigen::MatrixXd z = f.activations.back() * weights_[l];
        z.rowwise() += biases_[l];
        if (l + 1 < weights_.size()) {
            z = z.cwiseMax(0.0);
        }
        f.activations.push_back(std::move(z));
    }
    return f;
}

Eigen::MatrixXd Mlp::predict(const Eigen::Ref<const Eigen::MatrixXd>& x) const
{
    return forward(x).activations.back();
}

MlpGradient Mlp::backward(const Forward& f, const Eigen::Ref<const Eigen::MatrixXd>& d_out) const
{
    MlpGradient g;
    g.weights.resize(weights_.size());
    g.biases.resize(biases_.size());
    Eigen::MatrixXd delta = d_out;
    for (std::size_t l = weights_.size(); l-- > 0;) {
        const Eigen::MatrixXd& in = f.activations[l];
        g.weights[l] = in.transpose() * delta;
        g.biases[l] = delta.colwise().sum();
        if (l > 0) {
            delta = (delta * weights_[l].transpose()).cwiseProduct((in.array() > 0.0).cast<double>().matrix());
        }
    }
    return g;
}

std::vector<ParamView> Mlp::parameters()
{
    std::vector<ParamView> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        out.push_back(flat(weights_[l]));
        out.push_back(flat(biases_[l]));
    }
    return out;
}

} // namespace dnlrl
