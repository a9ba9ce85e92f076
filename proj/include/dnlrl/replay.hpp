#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace dnlrl {

struct Transition {
    Eigen::VectorXd state;
    int action = 0;
    double reward = 0.0;
    Eigen::VectorXd next_state;
    bool done = false;      // terminal; no bootstrap
    bool truncated = false; // step limit; bootstrap still applies
};

/// Column-of-rows view of sampled transitions.
struct TransitionBatch {
    Eigen::MatrixXd states;      // b x dim
    Eigen::VectorXi actions;     // b
    Eigen::VectorXd rewards;     // b
    Eigen::MatrixXd next_states; // b x dim
    Eigen::VectorXd done;        // b, 0/1

    Eigen::Index size() const { return rewards.size(); }
};

/// Fixed-capacity FIFO ring; uniform sampling with replacement.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void add(const Transition& t);
    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return size_ == 0; }

    /// Logical index 0 is the oldest stored transition.
    Transition at(std::size_t i) const;
    std::vector<std::size_t> sample_indices(std::size_t batch, std::mt19937_64& rng) const;
    TransitionBatch gather(const std::vector<std::size_t>& indices) const;
    TransitionBatch sample(std::size_t batch, std::mt19937_64& rng) const { return gather(sample_indices(batch, rng)); }

private:
    std::size_t physical(std::size_t logical) const { return (head_ + capacity_ - size_ + logical) % capacity_; }

    std::size_t capacity_;
    std::size_t size_ = 0;
    std::size_t head_ = 0; // next write slot
    Eigen::MatrixXd states_;
    Eigen::MatrixXd next_states_;
    Eigen::VectorXi actions_;
    Eigen::VectorXd rewards_;
    Eigen::VectorXd done_;
    std::vector<bool> truncated_;
};

} // namespace dnlrl
