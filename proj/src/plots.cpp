#include "dnlrl/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dnlrl/errors.hpp"

namespace dnlrl {

namespace {

std::string num(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void check_window(int window)
{
    if (window < 1) {
        throw ConfigError("moving window must be >= 1");
    }
}

} // namespace

std::vector<double> moving_average(const std::vector<double>& xs, int window)
{
    check_window(window);
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const std::size_t lo = i + 1 >= static_cast<std::size_t>(window) ? i + 1 - window : 0;
        double s = 0.0;
        for (std::size_t k = lo; k <= i; ++k) {
            s += xs[k];
        }
        out[i] = s / static_cast<double>(i + 1 - lo);
    }
    return out;
}

std::vector<double> moving_std(const std::vector<double>& xs, int window)
{
    check_window(window);
    const auto mean = moving_average(xs, window);
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const std::size_t lo = i + 1 >= static_cast<std::size_t>(window) ? i + 1 - window : 0;
        double s = 0.0;
        for (std::size_t k = lo; k <= i; ++k) {
            s += (xs[k] - mean[i]) * (xs[k] - mean[i]);
        }
        out[i] = std::sqrt(s / static_cast<double>(i + 1 - lo));
    }
    return out;
}

std::string curve_csv(const std::vector<double>& rewards, int avg_window, int std_window)
{
    const auto ma = moving_average(rewards, avg_window);
    const auto sd = moving_std(rewards, std_window);
    std::string out = "episode,reward,moving_average_" + std::to_string(avg_window) + ",moving_std_"
        + std::to_string(std_window) + "\n";
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        out += std::to_string(i) + "," + num(rewards[i]) + "," + num(ma[i]) + "," + num(sd[i]) + "\n";
    }
    return out;
}

Overlay overlay(const std::vector<std::vector<double>>& runs, int avg_window)
{
    std::size_t longest = 0;
    std::vector<std::vector<double>> smooth;
    for (const auto& r : runs) {
        smooth.push_back(moving_average(r, avg_window));
        longest = std::max(longest, r.size());
    }
    Overlay o;
    o.mean.assign(longest, 0.0);
    o.stddev.assign(longest, 0.0);
    o.runs.assign(longest, 0);
    for (std::size_t i = 0; i < longest; ++i) {
        double s = 0.0;
        int n = 0;
        for (const auto& r : smooth) {
            if (i < r.size()) {
                s += r[i];
                ++n;
            }
        }
        const double m = s / n;
        double sq = 0.0;
        for (const auto& r : smooth) {
            if (i < r.size()) {
                sq += (r[i] - m) * (r[i] - m);
            }
        }
        o.mean[i] = m;
        o.stddev[i] = std::sqrt(sq / n);
        o.runs[i] = n;
    }
    return o;
}

std::string overlay_csv(const Overlay& o)
{
    std::string out = "episode,mean,std,lower,upper,runs\n";
    for (std::size_t i = 0; i < o.mean.size(); ++i) {
        out += std::to_string(i) + "," + num(o.mean[i]) + "," + num(o.stddev[i]) + "," + num(o.mean[i] - o.stddev[i])
            + "," + num(o.mean[i] + o.stddev[i]) + "," + std::to_string(o.runs[i]) + "\n";
    }
    return out;
}

} // namespace dnlrl
