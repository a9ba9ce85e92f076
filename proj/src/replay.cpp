#include "dnlrl/replay.hpp"

#include <cmath>

#include "dnlrl/errors.hpp"

namespace dnlrl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity)
{
    if (capacity == 0) {
        throw ConfigError("replay capacity must be > 0");
    }
    actions_.resize(static_cast<Eigen::Index>(capacity));
    rewards_.resize(static_cast<Eigen::Index>(capacity));
    done_.resize(static_cast<Eigen::Index>(capacity));
    truncated_.resize(capacity);
}

void ReplayBuffer::add(const Transition& t)
{
    if (states_.size() == 0) {
        states_.resize(static_cast<Eigen::Index>(capacity_), t.state.size());
        next_states_.resize(static_cast<Eigen::Index>(capacity_), t.state.size());
    }
    if (t.state.size() != states_.cols() || t.next_state.size() != states_.cols()) {
        throw DimensionError("replay: transition state width changed");
    }
    if (!t.state.allFinite() || !t.next_state.allFinite() || !std::isfinite(t.reward)) {
        throw NumericError("replay: non-finite transition");
    }
    const auto h = static_cast<Eigen::Index>(head_);
    states_.row(h) = t.state.transpose();
    next_states_.row(h) = t.next_state.transpose();
    actions_(h) = t.action;
    rewards_(h) = t.reward;
    done_(h) = t.done ? 1.0 : 0.0;
    truncated_[head_] = t.truncated;
    head_ = (head_ + 1) % capacity_;
    if (size_ < capacity_) {
        ++size_;
    }
}

Transition ReplayBuffer::at(std::size_t i) const
{
    if (i >= size_) {
        throw DimensionError("replay: index out of range");
    }
    const auto p = static_cast<Eigen::Index>(physical(i));
    return {states_.row(p).transpose(), actions_(p), rewards_(p), next_states_.row(p).transpose(), done_(p) > 0.5,
            truncated_[static_cast<std::size_t>(p)]};
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, std::mt19937_64& rng) const
{
    if (size_ == 0) {
        throw DimensionError("replay: sampling from an empty buffer");
    }
    std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
    std::vector<std::size_t> out(batch);
    for (auto& i : out) {
        i = pick(rng);
    }
    return out;
}

TransitionBatch ReplayBuffer::gather(const std::vector<std::size_t>& indices) const
{
    const auto b = static_cast<Eigen::Index>(indices.size());
    TransitionBatch out;
    out.states.resize(b, states_.cols());
    out.next_states.resize(b, states_.cols());
    out.actions.resize(b);
    out.rewards.resize(b);
    out.done.resize(b);
    for (Eigen::Index r = 0; r < b; ++r) {
        const auto p = static_cast<Eigen::Index>(physical(indices[static_cast<std::size_t>(r)]));
        out.states.row(r) = states_.row(p);
        out.next_states.row(r) = next_states_.row(p);
        out.actions(r) = actions_(p);
        out.rewards(r) = rewards_(p);
        out.done(r) = done_(p);
    }
    return out;
}

} // namespace dnlrl
