#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "earth/eano.hpp"
#include "earth/tensor.hpp"

// Fixed-step integration of the joint latent state. Every stage evaluation
// runs through the ordinary tensor ops, so when the initial state and the
// parameters live on a tape, backward() differentiates through the unrolled
// steps (discretize-then-optimize).

namespace earth {

enum class OdeMethod { euler, rk4 };

struct OdeConfig {
    OdeMethod method          = OdeMethod::rk4;
    int substeps_per_interval = 2;
    double t_start            = 0.0;
    double t_end              = 1.0;
    // Observation intervals covered by [t_start, t_end]; total step count is
    // intervals * substeps_per_interval.
    int intervals = 1;
};

// Maps (t, state) to d(state)/dt. Control paths, the transmission graph and
// the parameters are captured by the callable.
using VectorField = std::function<LatentState(double, const LatentState&)>;

using Trajectory = std::vector<std::pair<double, LatentState>>;

LatentState step_euler(const VectorField& f, double t, const LatentState& y, double h);
LatentState step_rk4(const VectorField& f, double t, const LatentState& y, double h);

// Integrates from t_start to t_end. The trajectory holds every solver step,
// first entry (t_start, initial), last entry (t_end, final). Time stamps are
// t_start + i*h computed by multiplication. Throws on non-finite states,
// reporting the step index.
Trajectory integrate(const VectorField& f, const LatentState& initial, const OdeConfig& cfg);

}  // namespace earth
