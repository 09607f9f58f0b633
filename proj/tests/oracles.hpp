#pragma once

// Test-side oracles, independent of the library code paths they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "earth/tensor.hpp"

namespace oracles {

// Central finite differences of f at x, step h. f sees a plain (off-tape)
// tensor and returns a plain double.
inline std::vector<double> fd_gradient(const std::function<double(const earth::Tensor&)>& f,
                                       const earth::Tensor& x, double h = 1e-6)
{
    std::vector<double> g(x.size());
    std::vector<double> base(x.data().begin(), x.data().end());
    for (long i = 0; i < (long)base.size(); ++i) {
        auto hi = base;
        auto lo = base;
        hi[i] += h;
        lo[i] -= h;
        const double fp = f(earth::Tensor(x.shape(), hi));
        const double fm = f(earth::Tensor(x.shape(), lo));
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline double rel_err(double a, double b, double floor = 1e-8)
{
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

inline double max_rel_err(const std::vector<double>& a, const std::vector<double>& b,
                          double floor = 1e-8)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, rel_err(a[i], b[i], floor));
    return m;
}

// Brute-force dynamic time warping: enumerate every monotone alignment of the
// two series and take the cheapest. Exponential; only for lengths <= ~8.
inline double dtw_brute_force(const std::vector<double>& a, const std::vector<double>& b)
{
    double best = std::numeric_limits<double>::infinity();
    std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j,
                                                                     double cost) {
        cost += std::fabs(a[i] - b[j]);
        if (cost >= best)
            return;
        if (i + 1 == a.size() && j + 1 == b.size()) {
            best = std::min(best, cost);
            return;
        }
        if (i + 1 < a.size())
            walk(i + 1, j, cost);
        if (j + 1 < b.size())
            walk(i, j + 1, cost);
        if (i + 1 < a.size() && j + 1 < b.size())
            walk(i + 1, j + 1, cost);
    };
    walk(0, 0, 0.0);
    return best;
}

inline std::vector<double> random_values(std::mt19937_64& rng, long n, double lo = -2.0,
                                         double hi = 2.0)
{
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v)
        x = dist(rng);
    return v;
}

inline earth::Tensor random_tensor(std::mt19937_64& rng, earth::Shape shape, double lo = -2.0,
                                   double hi = 2.0)
{
    long n = 1;
    for (int d : shape)
        n *= d;
    return earth::Tensor(std::move(shape), random_values(rng, n, lo, hi));
}

}  // namespace oracles
