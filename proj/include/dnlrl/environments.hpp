#pragma once

// Built-in episodic environments: CartPole, a simplified planar lunar
// lander, and a two-state MDP with a known optimum.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dnlrl/predicates.hpp"

namespace dnlrl {

struct StepResult {
    Eigen::VectorXd state;
    double reward = 0.0;
    bool done = false;      // terminal state reached
    bool truncated = false; // step limit hit, state is not terminal
};

struct EnvInfo {
    std::string name;
    FeatureSchema schema; // default binning ranges and bin counts
    std::vector<std::string> actions;
    int max_steps = 0;
};

class Environment {
public:
    virtual ~Environment() = default;
    virtual const EnvInfo& info() const = 0;
    virtual Eigen::VectorXd reset(std::uint64_t seed) = 0;
    virtual StepResult step(int action) = 0;
};

/// "cartpole", "lunar_lander", "toy_mdp"; throws ConfigError otherwise.
std::unique_ptr<Environment> make_environment(const std::string& name);
EnvInfo environment_info(const std::string& name);

// ---------------------------------------------------------------- CartPole

namespace cartpole {
inline constexpr double kGravity = 9.8;
inline constexpr double kCartMass = 1.0;
inline constexpr double kPoleMass = 0.1;
inline constexpr double kTotalMass = kCartMass + kPoleMass;
inline constexpr double kHalfLength = 0.5;
inline constexpr double kPoleMassLength = kPoleMass * kHalfLength;
inline constexpr double kForce = 10.0;
inline constexpr double kTau = 0.02;
inline constexpr double kThetaLimit = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
inline constexpr double kXLimit = 2.4;
inline constexpr int kMaxSteps = 300;
enum Action : int { Left = 0, Right = 1 };
} // namespace cartpole

/// (x, x', theta, theta'), each uniform in [-0.05, 0.05].
Eigen::Vector4d cartpole_reset(std::uint64_t seed);

struct CartPoleTransition {
    Eigen::Vector4d state;
    double reward = 0.0;
    bool done = false;
};

/// One Euler step of the equations of motion under a horizontal force (N),
/// without termination checks.
Eigen::Vector4d cartpole_dynamics(const Eigen::Vector4d& s, double force);

/// One Euler step of the cart-pole dynamics; reward 1 unless the step ends
/// outside the position/angle limits.
CartPoleTransition cartpole_step(const Eigen::Vector4d& s, int action);

class CartPole final : public Environment {
public:
    CartPole();
    const EnvInfo& info() const override { return info_; }
    Eigen::VectorXd reset(std::uint64_t seed) override;
    StepResult step(int action) override;

private:
    EnvInfo info_;
    Eigen::Vector4d state_ = Eigen::Vector4d::Zero();
    int steps_ = 0;
};

// ------------------------------------------------------------ Lunar lander

enum class LanderAction : int { DoNothing = 0, FireLeft = 1, FireMain = 2, FireRight = 3 };

struct LanderParams {
    double dt = 0.05;
    int substeps = 2;
    double gravity = 1.0;
    double main_accel = 2.2;
    double side_accel = 0.45;
    double side_angular_accel = 1.6;
    double leg_dx = 0.12;   // foot offset from center, body frame
    double leg_dy = -0.12;
    double hull_dx = 0.1;   // hull bottom corners, body frame
    double hull_dy = -0.04;
    double spring = 40.0;   // leg stiffness per unit compression
    double damping = 12.0;
    double friction = 4.0;
    double inertia = 0.08;  // angular response to leg forces
    double rest_speed = 0.05;
    double x_limit = 1.5;
    double y_limit = 2.2;
    double main_fuel = 0.3;
    double side_fuel = 0.03;
    int max_steps = 400;
};

struct LanderState {
    double x = 0.0, y = 1.4, vx = 0.0, vy = 0.0, angle = 0.0, omega = 0.0;
    bool left_contact = false;
    bool right_contact = false;
    double prev_shaping = 0.0;
    bool has_shaping = false;

    /// (x, y, vx, vy, angle, omega, left, right)
    Eigen::VectorXd observation() const;
};

struct LanderTransition {
    LanderState state;
    double reward = 0.0;
    bool done = false;
    bool landed = false;
    bool crashed = false;
};

LanderState lander_reset(std::uint64_t seed, const LanderParams& p = {});
LanderTransition lander_step(const LanderState& s, int action, const LanderParams& p = {});
/// -100 |pos| - 100 |vel| - 100 |angle| + 10 per leg in contact.
double lander_shaping(const LanderState& s);

class LunarLander final : public Environment {
public:
    explicit LunarLander(LanderParams p = {});
    const EnvInfo& info() const override { return info_; }
    Eigen::VectorXd reset(std::uint64_t seed) override;
    StepResult step(int action) override;

    void set_state(const LanderState& s) { state_ = s; steps_ = 0; }
    const LanderState& state() const { return state_; }
    const LanderParams& params() const { return params_; }

private:
    EnvInfo info_;
    LanderParams params_;
    LanderState state_;
    int steps_ = 0;
};

// ----------------------------------------------------------- two-state MDP

/// States {0, 1}, observed as the Boolean feature InStateOne.
///   state 0: collect -> reward 1, stay;   advance -> reward 0, go to 1
///   state 1: collect -> reward 4, go to 0; advance -> reward 0, stay
/// Episodes are truncated after max_steps.
class ToyMdp final : public Environment {
public:
    explicit ToyMdp(int max_steps = 20);
    const EnvInfo& info() const override { return info_; }
    Eigen::VectorXd reset(std::uint64_t seed) override;
    StepResult step(int action) override;

    static constexpr int kStates = 2;
    static constexpr int kActions = 2;
    static int next_state(int s, int a);
    static double reward(int s, int a);

private:
    EnvInfo info_;
    int state_ = 0;
    int steps_ = 0;
};

} // namespace dnlrl
