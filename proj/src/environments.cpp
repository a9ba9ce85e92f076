#include "dnlrl/environments.hpp"

#include <cmath>
#include <random>

namespace dnlrl {

namespace {

void check_action(int action, int count, const char* env)
{
    if (action < 0 || action >= count) {
        throw ConfigError(std::string(env) + ": invalid action index " + std::to_string(action));
    }
}

EnvInfo cartpole_info()
{
    EnvInfo info;
    info.name = "cartpole";
    info.schema.continuous = {
        {"CartPos", -4.8, 4.8, 4},
        {"CartVeloc", -3.0, 3.0, 4},
        {"PoleAngle", -0.418, 0.418, 4},
        {"PoleAngleVeloc", -3.0, 3.0, 4},
    };
    info.actions = {"left", "right"};
    info.max_steps = cartpole::kMaxSteps;
    return info;
}

EnvInfo lander_info(const LanderParams& p)
{
    EnvInfo info;
    info.name = "lunar_lander";
    info.schema.continuous = {
        {"CoordX", -1.0, 1.0, 3},
        {"CoordY", 0.0, 1.5, 3},
        {"LinearVelocX", -1.0, 1.0, 3},
        {"LinearVelocY", -1.5, 0.5, 3},
        {"Angle", -0.6, 0.6, 3},
        {"AngularVeloc", -1.5, 1.5, 3},
    };
    info.schema.discrete = {{"LeftLegContact"}, {"RightLegContact"}};
    info.actions = {"doNothing", "fireLeft", "fireMain", "fireRight"};
    info.max_steps = p.max_steps;
    return info;
}

EnvInfo toy_info(int max_steps)
{
    EnvInfo info;
    info.name = "toy_mdp";
    info.schema.discrete = {{"InStateOne"}};
    info.actions = {"collect", "advance"};
    info.max_steps = max_steps;
    return info;
}

} // namespace

std::unique_ptr<Environment> make_environment(const std::string& name)
{
    if (name == "cartpole") {
        return std::make_unique<CartPole>();
    }
    if (name == "lunar_lander") {
        return std::make_unique<LunarLander>();
    }
    if (name == "toy_mdp") {
        return std::make_unique<ToyMdp>();
    }
    throw ConfigError("unknown environment '" + name + "'");
}

EnvInfo environment_info(const std::string& name)
{
    return make_environment(name)->info();
}

// ---------------------------------------------------------------- CartPole

Eigen::Vector4d cartpole_reset(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    Eigen::Vector4d s;
    for (int i = 0; i < 4; ++i) {
        s(i) = u(rng);
    }
    return s;
}

Eigen::Vector4d cartpole_dynamics(const Eigen::Vector4d& s, double force)
{
    using namespace cartpole;
    const double x = s(0), x_dot = s(1), theta = s(2), theta_dot = s(3);
    const double cos_t = std::cos(theta);
    const double sin_t = std::sin(theta);
    const double temp = (force + kPoleMassLength * theta_dot * theta_dot * sin_t) / kTotalMass;
    const double theta_acc = (kGravity * sin_t - cos_t * temp)
                             / (kHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / kTotalMass));
    const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;
    Eigen::Vector4d next;
    next << x + kTau * x_dot, x_dot + kTau * x_acc, theta + kTau * theta_dot, theta_dot + kTau * theta_acc;
    return next;
}

CartPoleTransition cartpole_step(const Eigen::Vector4d& s, int action)
{
    using namespace cartpole;
    check_action(action, 2, "cartpole");
    CartPoleTransition t;
    t.state = cartpole_dynamics(s, action == Right ? kForce : -kForce);
    t.done = t.state(0) < -kXLimit || t.state(0) > kXLimit || t.state(2) < -kThetaLimit || t.state(2) > kThetaLimit;
    t.reward = t.done ? 0.0 : 1.0;
    return t;
}

CartPole::CartPole() : info_(cartpole_info()) {}

Eigen::VectorXd CartPole::reset(std::uint64_t seed)
{
    state_ = cartpole_reset(seed);
    steps_ = 0;
    return state_;
}

StepResult CartPole::step(int action)
{
    const auto t = cartpole_step(state_, action);
    state_ = t.state;
    ++steps_;
    StepResult r{state_, t.reward, t.done, false};
    r.truncated = !t.done && steps_ >= info_.max_steps;
    return r;
}

// ------------------------------------------------------------ Lunar lander

Eigen::VectorXd LanderState::observation() const
{
    Eigen::VectorXd o(8);
    o << x, y, vx, vy, angle, omega, left_contact ? 1.0 : 0.0, right_contact ? 1.0 : 0.0;
    return o;
}

double lander_shaping(const LanderState& s)
{
    return -100.0 * std::sqrt(s.x * s.x + s.y * s.y) - 100.0 * std::sqrt(s.vx * s.vx + s.vy * s.vy)
           - 100.0 * std::abs(s.angle) + 10.0 * (s.left_contact ? 1.0 : 0.0) + 10.0 * (s.right_contact ? 1.0 : 0.0);
}

LanderState lander_reset(std::uint64_t seed, const LanderParams&)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    LanderState s;
    s.x = 0.3 * u(rng);
    s.y = 1.4;
    s.vx = 0.4 * u(rng);
    s.vy = -0.25 + 0.25 * u(rng);
    s.angle = 0.1 * u(rng);
    s.omega = 0.2 * u(rng);
    return s;
}

namespace {

struct Vec2 {
    double x, y;
};

// Body-frame offset rotated into the world frame.
Vec2 rotate(double bx, double by, double c, double s) { return {c * bx - s * by, s * bx + c * by}; }

struct FootForce {
    double fx = 0.0, fy = 0.0, torque = 0.0;
    bool contact = false;
};

FootForce foot_force(const LanderState& s, double bx, double by, double c, double sn, const LanderParams& p)
{
    FootForce f;
    const Vec2 r = rotate(bx, by, c, sn);
    const double foot_y = s.y + r.y;
    if (foot_y > 0.0) {
        return f;
    }
    f.contact = true;
    // point velocity v + omega x r
    const double vfx = s.vx - s.omega * r.y;
    const double vfy = s.vy + s.omega * r.x;
    f.fy = std::max(0.0, p.spring * -foot_y - p.damping * vfy);
    f.fx = -p.friction * vfx;
    f.torque = r.x * f.fy - r.y * f.fx;
    return f;
}

bool hull_touches(const LanderState& s, const LanderParams& p, double c, double sn)
{
    const Vec2 left = rotate(-p.hull_dx, p.hull_dy, c, sn);
    const Vec2 right = rotate(p.hull_dx, p.hull_dy, c, sn);
    return s.y + left.y <= 0.0 || s.y + right.y <= 0.0;
}

} // namespace

LanderTransition lander_step(const LanderState& s0, int action, const LanderParams& p)
{
    check_action(action, 4, "lunar_lander");
    const auto act = static_cast<LanderAction>(action);
    LanderTransition t;
    LanderState s = s0;
    if (!s.has_shaping) {
        s.prev_shaping = lander_shaping(s);
        s.has_shaping = true;
    }
    const double h = p.dt / p.substeps;
    bool hull_hit = false;
    for (int k = 0; k < p.substeps; ++k) {
        const double c = std::cos(s.angle);
        const double sn = std::sin(s.angle);
        double ax = 0.0;
        double ay = -p.gravity;
        double alpha = 0.0;
        switch (act) {
        case LanderAction::FireMain: // along the body up axis (-sin, cos)
            ax += -sn * p.main_accel;
            ay += c * p.main_accel;
            break;
        case LanderAction::FireLeft: // pushes toward body right, clockwise torque
            ax += c * p.side_accel;
            ay += sn * p.side_accel;
            alpha -= p.side_angular_accel;
            break;
        case LanderAction::FireRight:
            ax -= c * p.side_accel;
            ay -= sn * p.side_accel;
            alpha += p.side_angular_accel;
            break;
        case LanderAction::DoNothing:
            break;
        }
        const FootForce lf = foot_force(s, -p.leg_dx, p.leg_dy, c, sn, p);
        const FootForce rf = foot_force(s, p.leg_dx, p.leg_dy, c, sn, p);
        ax += lf.fx + rf.fx;
        ay += lf.fy + rf.fy;
        alpha += (lf.torque + rf.torque) / p.inertia;
        s.left_contact = lf.contact;
        s.right_contact = rf.contact;

        // semi-implicit Euler
        s.vx += h * ax;
        s.vy += h * ay;
        s.omega += h * alpha;
        s.x += h * s.vx;
        s.y += h * s.vy;
        s.angle += h * s.omega;
        if (hull_touches(s, p, std::cos(s.angle), std::sin(s.angle))) {
            hull_hit = true;
            break;
        }
    }
    {
        const double c = std::cos(s.angle);
        const double sn = std::sin(s.angle);
        s.left_contact = s.y + rotate(-p.leg_dx, p.leg_dy, c, sn).y <= 0.0;
        s.right_contact = s.y + rotate(p.leg_dx, p.leg_dy, c, sn).y <= 0.0;
    }

    const double shaping = lander_shaping(s);
    double reward = shaping - s.prev_shaping;
    s.prev_shaping = shaping;
    if (act == LanderAction::FireMain) {
        reward -= p.main_fuel;
    } else if (act != LanderAction::DoNothing) {
        reward -= p.side_fuel;
    }

    const bool out_of_bounds = std::abs(s.x) > p.x_limit || s.y > p.y_limit;
    const bool at_rest = s.left_contact && s.right_contact && std::abs(s.vx) < p.rest_speed
                         && std::abs(s.vy) < p.rest_speed && std::abs(s.omega) < p.rest_speed;
    if (hull_hit || out_of_bounds) {
        t.crashed = true;
        t.done = true;
        reward = -100.0;
    } else if (at_rest) {
        t.landed = true;
        t.done = true;
        reward += 100.0;
    }
    t.state = s;
    t.reward = reward;
    return t;
}

LunarLander::LunarLander(LanderParams p) : info_(lander_info(p)), params_(p) {}

Eigen::VectorXd LunarLander::reset(std::uint64_t seed)
{
    state_ = lander_reset(seed, params_);
    steps_ = 0;
    return state_.observation();
}

StepResult LunarLander::step(int action)
{
    const auto t = lander_step(state_, action, params_);
    state_ = t.state;
    ++steps_;
    StepResult r{state_.observation(), t.reward, t.done, false};
    r.truncated = !t.done && steps_ >= info_.max_steps;
    return r;
}

// ----------------------------------------------------------- two-state MDP

ToyMdp::ToyMdp(int max_steps) : info_(toy_info(max_steps)) {}

int ToyMdp::next_state(int s, int a)
{
    if (s == 0) {
        return a == 0 ? 0 : 1;
    }
    return a == 0 ? 0 : 1;
}

double ToyMdp::reward(int s, int a)
{
    if (s == 0) {
        return a == 0 ? 1.0 : 0.0;
    }
    return a == 0 ? 4.0 : 0.0;
}

Eigen::VectorXd ToyMdp::reset(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    state_ = static_cast<int>(rng() & 1U);
    steps_ = 0;
    return Eigen::VectorXd::Constant(1, state_);
}

StepResult ToyMdp::step(int action)
{
    check_action(action, kActions, "toy_mdp");
    const double r = reward(state_, action);
    state_ = next_state(state_, action);
    ++steps_;
    return {Eigen::VectorXd::Constant(1, state_), r, false, steps_ >= info_.max_steps};
}

} // namespace dnlrl
