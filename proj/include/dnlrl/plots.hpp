#pragma once

// Plot data for reward curves: trailing moving statistics and multi-seed
// overlays, written as CSV.

#include <string>
#include <vector>

namespace dnlrl {

/// Trailing mean; the first window-1 entries average what is available.
std::vector<double> moving_average(const std::vector<double>& xs, int window = 50);
/// Trailing population standard deviation, same windowing.
std::vector<double> moving_std(const std::vector<double>& xs, int window = 20);

/// episode,reward,moving_average_50,moving_std_20
std::string curve_csv(const std::vector<double>& rewards, int avg_window = 50, int std_window = 20);

struct Overlay {
    std::vector<double> mean; // across runs, of each run's moving average
    std::vector<double> stddev;
    std::vector<int> runs; // how many runs reached each episode
};

Overlay overlay(const std::vector<std::vector<double>>& runs, int avg_window = 50);
/// episode,mean,std,lower,upper,runs
std::string overlay_csv(const Overlay& o);

} // namespace dnlrl
