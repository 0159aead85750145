#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "oilcast/series.hpp"

namespace oilcast {

// Geometric Brownian motion dS = mu S dt + sigma S dW, calibrated from
// a raw price series and anchored at its last observation.
struct GbmModel {
    double mu = 0.0;    // drift per unit time
    double sigma = 0.0; // volatility per sqrt(unit time)
    double s0 = 0.0;    // initial price, USD/barrel
    double dt = 1.0 / 252.0;
};

// num_paths x (horizon + 1) simulated prices; column 0 is s0 on every
// path and every entry is positive.
struct PathMatrix {
    std::size_t num_paths = 0;
    std::size_t horizon = 0;
    std::vector<double> values; // row-major, one row per path

    double at(std::size_t path, std::size_t step) const {
        return values[path * (horizon + 1) + step];
    }
    std::span<const double> path(std::size_t p) const {
        return {values.data() + p * (horizon + 1), horizon + 1};
    }

    bool operator==(const PathMatrix&) const = default;
};

// Log-return calibration: r_i = ln(S_i / S_{i-1}),
// sigma^ = sample_std(r) / sqrt(dt) (n-1 denominator),
// mu^ = mean(r) / dt + sigma^2 / 2, s0 = last observed price.
GbmModel estimate_gbm(const PriceSeries& series, double dt);

// Exact log-Euler scheme S_{t+1} = S_t exp((mu - sigma^2/2) dt +
// sigma sqrt(dt) Z). Path p draws from Rng::substream(seed, p), so the
// matrix is identical for any thread count. num_threads 0 picks the
// hardware concurrency.
PathMatrix simulate_paths(const GbmModel& model, std::size_t horizon, std::size_t num_paths,
                          std::uint64_t seed, unsigned num_threads = 1);

// Arithmetic mean across paths at each step.
std::vector<double> mean_path(const PathMatrix& paths);

// CSV schema: step,path_0,...,path_{n-1},mean; one row per time step.
void write_paths_csv(std::ostream& out, const PathMatrix& paths);

} // namespace oilcast
