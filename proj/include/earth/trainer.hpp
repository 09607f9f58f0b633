#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "earth/checkpoint.hpp"
#include "earth/config.hpp"
#include "earth/dataset.hpp"
#include "earth/model.hpp"

// Training loop, SGD with momentum and weight decay, evaluation against the
// persistence baseline, and the end-to-end gradient check.

namespace earth {

struct EpochRecord {
    int epoch;
    double train_loss;
    double val_rmse;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<EpochRecord> history;
    bool diverged = false;
};

struct MetricsRecord {
    std::string dataset;
    int horizon = 0;
    std::uint64_t seed = 0;
    double rmse = 0.0;
    std::optional<double> peak_time_error;
    double rmse_persistence = 0.0;
    std::optional<double> peak_time_error_persistence;
    double wall_time_s = 0.0;
};

// One line per record: "dataset=... horizon=... seed=... rmse=... ..."
std::string format_record(const MetricsRecord& rec);

// v' = momentum*v + (g + weight_decay*p); p' = p - lr*v'. `velocity` is
// created on first use and must stay paired with `params`. Throws on a
// non-finite gradient, naming the parameter.
void sgd_step(ModelParams& params, const GradMap& grads, const TrainConfig& cfg,
              std::vector<Tensor>& velocity);

// Full training run. Splits are reassigned from cfg ratios; the best
// validation checkpoint is returned. `log` (optional) receives one line per
// epoch. Two runs with identical inputs produce bit-identical checkpoints.
TrainResult train(const EpidemicDataset& dataset, const TrainConfig& cfg,
                  std::ostream* log = nullptr);

// Test-split metrics in raw units, plus the persistence baseline
// (predict x_{T+h} = x_T).
MetricsRecord evaluate(const Checkpoint& ckpt, const EpidemicDataset& dataset, int horizon,
                       const std::string& dataset_name = "dataset");

// Prediction from the last `window` observations of the series, raw units.
std::vector<double> forecast(const Checkpoint& ckpt, const EpidemicDataset& dataset);

// Mean/stddev of metrics across `repeats` seeded runs (seed, seed+1, ...).
struct RepeatSummary {
    double rmse_mean = 0.0, rmse_std = 0.0;
    double pte_mean = 0.0, pte_std = 0.0;
    int pte_count = 0;  // runs with a defined peak-time error
    double rmse_persistence = 0.0;
    std::vector<MetricsRecord> runs;
};
RepeatSummary run_repeats(const EpidemicDataset& dataset, const TrainConfig& cfg,
                          std::ostream* log = nullptr);

// --- gradient check ---------------------------------------------------------

struct GradcheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
};

struct GradcheckReport {
    std::vector<GradcheckEntry> params;
    double max_rel_err = 0.0;
};

// End-to-end analytic vs central-finite-difference gradients on a tiny
// configuration (N=3, d=4, T=5 by default).
GradcheckReport gradcheck(std::uint64_t seed = 0, int regions = 3, int hidden = 4, int window = 5);

}  // namespace earth
