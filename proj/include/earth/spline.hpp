#pragma once

#include <cstdint>
#include <vector>

// Continuous controlling path for one region: channel 0 is the time identity,
// the remaining channels are natural cubic splines through the observation
// knots. Immutable after fit; safe for concurrent reads.

namespace earth {

class ControlPath {
public:
    // `observations` is n_knots x (channels - 1), row-major: one row per knot.
    static ControlPath fit(const std::vector<double>& times,
                           const std::vector<std::vector<double>>& observations);

    int channels() const { return n_channels_; }
    double t_begin() const { return knots_.front(); }
    double t_end() const { return knots_.back(); }
    const std::vector<double>& knots() const { return knots_; }

    // Q(t) / dQ(t)/dt, length channels(). t must lie inside the knot range
    // (a tiny boundary fuzz absorbs solver endpoint rounding).
    std::vector<double> evaluate(double t) const;
    std::vector<double> derivative(double t) const;

private:
    ControlPath() = default;

    int segment_of(double t) const;

    int n_channels_ = 0;
    std::vector<double> knots_;
    // per spline channel: values y[i] and second derivatives m[i] at knots
    std::vector<std::vector<double>> values_;
    std::vector<std::vector<double>> second_derivs_;
};

// Removes a uniformly random subset of interior knots; the first and last
// knot always survive so the integration domain is unchanged. `observations`
// is regions x n_knots (one shared time grid). Returns the surviving times
// and the thinned matrix.
struct ThinnedSeries {
    std::vector<double> times;
    std::vector<std::vector<double>> observations;
};

ThinnedSeries drop_observations(const std::vector<double>& times,
                                const std::vector<std::vector<double>>& observations,
                                double missing_rate, std::uint64_t seed);

}  // namespace earth
