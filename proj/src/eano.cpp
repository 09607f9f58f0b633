#include "earth/eano.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace earth {

Tensor temporal_drive(const Tensor& z, const Tensor& dqdt, const EanoParams& p)
{
    const int n = z.rows();
    const int d = z.cols();
    const int c = dqdt.cols();
    if (dqdt.rows() != n)
        throw std::invalid_argument("temporal_drive: dQ/dt rows " + shape_str(dqdt.shape()) +
                                    " do not match state " + shape_str(z.shape()));
    if (p.psi_w2.cols() != d * c)
        throw std::invalid_argument("temporal_drive: psi output width " +
                                    shape_str(p.psi_w2.shape()) + " does not match d*c=" +
                                    std::to_string(d * c));

    Tensor hidden = tanh(add(matmul(z, p.psi_w1), broadcast_rows(p.psi_b1, n)));
    Tensor psi    = add(matmul(hidden, p.psi_w2), broadcast_rows(p.psi_b2, n));  // N x (d*c)

    Tensor g;
    for (int j = 0; j < c; ++j) {
        Tensor block  = slice_cols(psi, j * d, d);
        Tensor scaled = scale_rows(block, slice_cols(dqdt, j, 1));
        g = j == 0 ? scaled : add(g, scaled);
    }
    return g;
}

Tensor row_normalized(const Tensor& e_t)
{
    // recip maps exact zeros to zero, so all-zero rows stay all-zero.
    return scale_rows(e_t, recip(row_sums(e_t)));
}

SirDrift sir_drift(const LatentState& state, const Tensor& e_t, const EanoParams& p,
                   const Tensor* drive, DriftMode mode, bool row_normalize)
{
    const int n = state.s.rows();
    if (e_t.rows() != n || e_t.cols() != n)
        throw std::invalid_argument("sir_drift: transmission matrix " + shape_str(e_t.shape()) +
                                    " does not match " + std::to_string(n) + " regions");

    Tensor weights = row_normalize ? row_normalized(e_t) : e_t;
    Tensor agg     = matmul(weights, state.i);  // neighborhood infection pressure
    Tensor trans   = matmul(concat_last_axis(state.s, agg), p.w_trans);
    Tensor recov   = matmul(state.i, p.w_recov);

    if (!trans.all_finite() || !recov.all_finite())
        throw std::runtime_error("sir_drift: non-finite drift term");

    if (mode == DriftMode::modulated && drive) {
        trans = mul(trans, *drive);
        recov = mul(recov, *drive);
    }

    // ds = -trans, dr = recov, di = trans - recov: shared subexpressions make
    // the compartment sum cancel exactly.
    SirDrift out;
    out.ds = neg(trans);
    out.di = sub(trans, recov);
    out.dr = recov;
    return out;
}

SirPoint classical_sir_step(const ClassicalSir& m, const SirPoint& x, double h)
{
    auto f = [&m](const SirPoint& p) {
        const double infect = m.beta * p.s * p.i / m.population;
        return SirPoint{-infect, infect - m.gamma * p.i, m.gamma * p.i};
    };
    auto axpy = [](const SirPoint& p, double a, const SirPoint& k) {
        return SirPoint{p.s + a * k.s, p.i + a * k.i, p.r + a * k.r};
    };

    const SirPoint k1 = f(x);
    const SirPoint k2 = f(axpy(x, h / 2, k1));
    const SirPoint k3 = f(axpy(x, h / 2, k2));
    const SirPoint k4 = f(axpy(x, h, k3));

    SirPoint next{x.s + h / 6 * (k1.s + 2 * k2.s + 2 * k3.s + k4.s),
                  x.i + h / 6 * (k1.i + 2 * k2.i + 2 * k3.i + k4.i),
                  x.r + h / 6 * (k1.r + 2 * k2.r + 2 * k3.r + k4.r)};

    const double tol = -1e-9 * m.population;
    if (next.s < tol || next.i < tol || next.r < tol)
        throw std::runtime_error("classical_sir_step: compartment went negative");
    return next;
}

}  // namespace earth
