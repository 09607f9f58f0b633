#include "earth/ode.hpp"

#include <stdexcept>
#include <string>

namespace earth {

namespace {

LatentState ls_axpy(const LatentState& y, double a, const LatentState& k)
{
    return {axpy(y.z, k.z, a), axpy(y.s, k.s, a), axpy(y.i, k.i, a), axpy(y.r, k.r, a),
            axpy(y.h, k.h, a)};
}

LatentState ls_rk4_combine(const LatentState& y, double h, const LatentState& k1,
                           const LatentState& k2, const LatentState& k3, const LatentState& k4)
{
    auto combine = [h](const Tensor& yb, const Tensor& a, const Tensor& b, const Tensor& c,
                       const Tensor& d) {
        Tensor acc = add(axpy(a, b, 2.0), axpy(d, c, 2.0));
        return axpy(yb, acc, h / 6.0);
    };
    return {combine(y.z, k1.z, k2.z, k3.z, k4.z), combine(y.s, k1.s, k2.s, k3.s, k4.s),
            combine(y.i, k1.i, k2.i, k3.i, k4.i), combine(y.r, k1.r, k2.r, k3.r, k4.r),
            combine(y.h, k1.h, k2.h, k3.h, k4.h)};
}

void check_config(const OdeConfig& cfg)
{
    if (cfg.substeps_per_interval < 1)
        throw std::invalid_argument("ode: substeps_per_interval must be >= 1");
    if (cfg.intervals < 1)
        throw std::invalid_argument("ode: intervals must be >= 1");
    if (!(cfg.t_end > cfg.t_start))
        throw std::invalid_argument("ode: t_end must exceed t_start");
}

}  // namespace

LatentState step_euler(const VectorField& f, double t, const LatentState& y, double h)
{
    if (!(h > 0))
        throw std::invalid_argument("step_euler: h must be positive");
    return ls_axpy(y, h, f(t, y));
}

LatentState step_rk4(const VectorField& f, double t, const LatentState& y, double h)
{
    if (!(h > 0))
        throw std::invalid_argument("step_rk4: h must be positive");
    const LatentState k1 = f(t, y);
    const LatentState k2 = f(t + h / 2, ls_axpy(y, h / 2, k1));
    const LatentState k3 = f(t + h / 2, ls_axpy(y, h / 2, k2));
    const LatentState k4 = f(t + h, ls_axpy(y, h, k3));
    return ls_rk4_combine(y, h, k1, k2, k3, k4);
}

Trajectory integrate(const VectorField& f, const LatentState& initial, const OdeConfig& cfg)
{
    check_config(cfg);
    if (!initial.all_finite())
        throw std::runtime_error("integrate: non-finite initial state");

    const int n_steps = cfg.intervals * cfg.substeps_per_interval;
    const double h    = (cfg.t_end - cfg.t_start) / n_steps;

    Trajectory traj;
    traj.reserve(n_steps + 1);
    traj.emplace_back(cfg.t_start, initial);

    LatentState y = initial;
    for (int i = 0; i < n_steps; ++i) {
        const double t = cfg.t_start + i * h;
        y = cfg.method == OdeMethod::rk4 ? step_rk4(f, t, y, h) : step_euler(f, t, y, h);
        if (!y.all_finite())
            throw std::runtime_error("integrate: state diverged at step " + std::to_string(i + 1) +
                                     " of " + std::to_string(n_steps));
        traj.emplace_back(cfg.t_start + (i + 1) * h, y);
    }
    return traj;
}

}  // namespace earth
