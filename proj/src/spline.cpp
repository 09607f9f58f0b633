#include "earth/spline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace earth {

namespace {

// Natural cubic spline second derivatives via the standard tridiagonal solve.
std::vector<double> natural_second_derivs(const std::vector<double>& t,
                                          const std::vector<double>& y)
{
    const int n = (int)t.size();
    std::vector<double> m(n, 0.0);
    if (n < 3)
        return m;  // two knots: a straight segment, M = 0 at both ends

    std::vector<double> diag(n, 0.0), off(n, 0.0), rhs(n, 0.0);
    for (int i = 1; i + 1 < n; ++i) {
        const double hl = t[i] - t[i - 1];
        const double hr = t[i + 1] - t[i];
        diag[i] = (hl + hr) / 3.0;
        off[i]  = hr / 6.0;
        rhs[i]  = (y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl;
    }
    // Thomas algorithm on rows 1..n-2; natural boundary pins m[0] = m[n-1] = 0.
    for (int i = 2; i + 1 < n; ++i) {
        const double hl = t[i] - t[i - 1];
        const double w  = (hl / 6.0) / diag[i - 1];
        diag[i] -= w * off[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    for (int i = n - 2; i >= 1; --i)
        m[i] = (rhs[i] - off[i] * (i + 1 < n - 1 ? m[i + 1] : 0.0)) / diag[i];
    return m;
}

constexpr double kDomainFuzz = 1e-9;

}  // namespace

ControlPath ControlPath::fit(const std::vector<double>& times,
                             const std::vector<std::vector<double>>& observations)
{
    if (times.size() < 2)
        throw std::invalid_argument("control path: need at least 2 knots, got " +
                                    std::to_string(times.size()));
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw std::invalid_argument(
                "control path: knot times not strictly increasing at index " + std::to_string(i));
    if (observations.size() != times.size())
        throw std::invalid_argument("control path: observation rows (" +
                                    std::to_string(observations.size()) +
                                    ") do not match knot count (" + std::to_string(times.size()) +
                                    ")");
    const std::size_t width = observations.front().size();
    for (const auto& row : observations) {
        if (row.size() != width)
            throw std::invalid_argument("control path: ragged observation rows");
        for (double v : row)
            if (std::isnan(v))
                throw std::invalid_argument(
                    "control path: NaN observation (missing points must be absent knots)");
    }

    ControlPath p;
    p.knots_      = times;
    p.n_channels_ = 1 + (int)width;
    p.values_.resize(width);
    p.second_derivs_.resize(width);
    for (std::size_t ch = 0; ch < width; ++ch) {
        auto& y = p.values_[ch];
        y.resize(times.size());
        for (std::size_t i = 0; i < times.size(); ++i)
            y[i] = observations[i][ch];
        p.second_derivs_[ch] = natural_second_derivs(times, y);
    }
    return p;
}

int ControlPath::segment_of(double t) const
{
    if (t < knots_.front() - kDomainFuzz || t > knots_.back() + kDomainFuzz)
        throw std::domain_error("control path: t=" + std::to_string(t) + " outside [" +
                                std::to_string(knots_.front()) + ", " +
                                std::to_string(knots_.back()) + "]; no extrapolation");
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    int i   = (int)(it - knots_.begin()) - 1;
    return std::clamp(i, 0, (int)knots_.size() - 2);
}

std::vector<double> ControlPath::evaluate(double t) const
{
    const int i     = segment_of(t);
    const double h  = knots_[i + 1] - knots_[i];
    const double dl = t - knots_[i];
    const double dr = knots_[i + 1] - t;

    std::vector<double> out(n_channels_);
    out[0] = t;  // identity time channel
    for (int ch = 0; ch + 1 < n_channels_; ++ch) {
        const auto& y = values_[ch];
        const auto& m = second_derivs_[ch];
        out[ch + 1] = m[i] * dr * dr * dr / (6.0 * h) + m[i + 1] * dl * dl * dl / (6.0 * h) +
                      (y[i] / h - m[i] * h / 6.0) * dr + (y[i + 1] / h - m[i + 1] * h / 6.0) * dl;
    }
    return out;
}

std::vector<double> ControlPath::derivative(double t) const
{
    const int i     = segment_of(t);
    const double h  = knots_[i + 1] - knots_[i];
    const double dl = t - knots_[i];
    const double dr = knots_[i + 1] - t;

    std::vector<double> out(n_channels_);
    out[0] = 1.0;
    for (int ch = 0; ch + 1 < n_channels_; ++ch) {
        const auto& y = values_[ch];
        const auto& m = second_derivs_[ch];
        out[ch + 1] = -m[i] * dr * dr / (2.0 * h) + m[i + 1] * dl * dl / (2.0 * h) -
                      (y[i] / h - m[i] * h / 6.0) + (y[i + 1] / h - m[i + 1] * h / 6.0);
    }
    return out;
}

ThinnedSeries drop_observations(const std::vector<double>& times,
                                const std::vector<std::vector<double>>& observations,
                                double missing_rate, std::uint64_t seed)
{
    if (missing_rate < 0.0 || missing_rate >= 1.0)
        throw std::invalid_argument("drop_observations: missing_rate must be in [0, 1), got " +
                                    std::to_string(missing_rate));
    if (times.size() < 2)
        throw std::invalid_argument("drop_observations: fewer than 2 knots");
    for (const auto& row : observations)
        if (row.size() != times.size())
            throw std::invalid_argument("drop_observations: observation row width mismatch");

    const long interior = (long)times.size() - 2;
    const long n_drop   = std::llround(missing_rate * (double)interior);

    std::vector<int> idx(interior);
    std::iota(idx.begin(), idx.end(), 1);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);

    std::vector<char> dropped(times.size(), 0);
    for (long i = 0; i < n_drop; ++i)
        dropped[idx[i]] = 1;

    ThinnedSeries out;
    out.observations.resize(observations.size());
    for (std::size_t j = 0; j < times.size(); ++j) {
        if (dropped[j])
            continue;
        out.times.push_back(times[j]);
        for (std::size_t r = 0; r < observations.size(); ++r)
            out.observations[r].push_back(observations[r][j]);
    }
    return out;
}

}  // namespace earth
