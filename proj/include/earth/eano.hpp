#pragma once

#include "earth/tensor.hpp"

// Epidemic-aware latent dynamics: disease states S, I, R as N x d features
// evolving under network-SIR-structured drifts, driven by the temporal state.

namespace earth {

// Joint latent state. All five blocks are N x d.
struct LatentState {
    Tensor z;  // temporal feature
    Tensor s;
    Tensor i;
    Tensor r;
    Tensor h;  // global trend feature

    bool all_finite() const
    {
        return z.all_finite() && s.all_finite() && i.all_finite() && r.all_finite() &&
               h.all_finite();
    }
};

// How the disease/trend drifts couple to the temporal drive g(t):
// modulated multiplies the drift elementwise by g, pure ignores g.
enum class DriftMode { modulated, pure };

struct EanoParams {
    // psi_t: d -> d*c MLP producing the time-manipulation map
    Tensor psi_w1;  // d x d
    Tensor psi_b1;  // 1 x d
    Tensor psi_w2;  // d x (d*c)
    Tensor psi_b2;  // 1 x (d*c)

    Tensor w_trans;  // 2d x d
    Tensor w_recov;  // d x d
};

// g_v = reshape(psi_t(Z_v), d x c) * dQdt_v. `dqdt` is N x c (a constant
// w.r.t. parameters). Channel blocks are laid out channel-major in the MLP
// output: block j covers columns [j*d, (j+1)*d).
Tensor temporal_drive(const Tensor& z, const Tensor& dqdt, const EanoParams& p);

// SIR-structured drifts. `e_t` is the N x N transmission weighting; rows are
// normalized to sum to 1 when `row_normalize` is set (zero rows stay zero).
// `drive` is the temporal drive g(t); in pure mode it is ignored.
// The three outputs share their transmission/recovery subexpressions so that
// (ds + dr) + di is exactly zero.
struct SirDrift {
    Tensor ds;
    Tensor di;
    Tensor dr;
};

SirDrift sir_drift(const LatentState& state, const Tensor& e_t, const EanoParams& p,
                   const Tensor* drive = nullptr, DriftMode mode = DriftMode::pure,
                   bool row_normalize = true);

Tensor row_normalized(const Tensor& e_t);

// Classical scalar SIR (one region, real counts), used by the synthetic data
// generator and as a sanity anchor for the latent dynamics.
struct ClassicalSir {
    double beta;   // transmission rate per step
    double gamma;  // recovery rate per step
    double population;
};

struct SirPoint {
    double s, i, r;
};

// One RK4 step of ds/dt = -b*s*i/P, di/dt = b*s*i/P - g*i, dr/dt = g*i.
SirPoint classical_sir_step(const ClassicalSir& m, const SirPoint& x, double h);

}  // namespace earth
