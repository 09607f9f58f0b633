#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "earth/tensor.hpp"

// Dataset ingestion, chronological splits, windowing, normalization, metrics
// and the synthetic networked-SIR generator used as the verification oracle.

namespace earth {

struct SplitRange {
    int begin = 0;  // inclusive
    int end   = 0;  // exclusive
    int length() const { return end - begin; }
};

struct EpidemicDataset {
    std::vector<std::string> region_names;
    // regions x length, cases per step, nonnegative
    std::vector<std::vector<double>> series;
    Tensor adjacency;  // N x N binary, symmetric, zero diagonal
    SplitRange train, val, test;

    int regions() const { return (int)region_names.size(); }
    int length() const { return series.empty() ? 0 : (int)series.front().size(); }
};

// series CSV: header row of region names, then one row of counts per step.
// adjacency CSV: header "src,dst", then undirected region-name edges.
EpidemicDataset load_csv(const std::string& series_path, const std::string& adjacency_path,
                         double train_ratio = 0.6, double val_ratio = 0.2);

void write_series_csv(const std::string& path, const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& series);
void write_adjacency_csv(const std::string& path, const std::vector<std::string>& names,
                         const Tensor& adjacency);

void assign_splits(EpidemicDataset& ds, double train_ratio, double val_ratio);

// One training sample: observed window values (regions x surviving knots,
// raw units), the local knot times, and the raw target h steps past the
// window end.
struct WindowSample {
    std::vector<std::vector<double>> x;  // regions x n_knots
    std::vector<double> knot_times;      // within [0, T-1]
    std::vector<double> target;          // length regions
    int start = 0;                       // absolute index of the window start
};

enum class Split { train, val, test };

// Sliding stride-1 windows inside one split; per-window knot dropping at
// `missing_rate` (seeded deterministically per window).
std::vector<WindowSample> make_windows(const EpidemicDataset& ds, Split split, int window,
                                       int horizon, double missing_rate, std::uint64_t seed);

// Per-region z-score statistics fitted on the training split only.
class Normalizer {
public:
    static Normalizer fit(const EpidemicDataset& ds);
    Normalizer() = default;
    Normalizer(std::vector<double> mean, std::vector<double> stddev);

    double forward(int region, double v) const;
    double inverse(int region, double v) const;
    const std::vector<double>& means() const { return mean_; }
    const std::vector<double>& stddevs() const { return std_; }

private:
    std::vector<double> mean_;
    std::vector<double> std_;
};

double rmse(const std::vector<double>& pred, const std::vector<double>& truth);

// MAE restricted to points where truth > threshold; nullopt when nothing
// qualifies.
std::optional<double> peak_time_error(const std::vector<double>& pred,
                                      const std::vector<double>& truth,
                                      const std::vector<double>& threshold);
std::optional<double> peak_time_error(const std::vector<double>& pred,
                                      const std::vector<double>& truth, double threshold);

// p in [0, 100]: linear-interpolation percentile, used for peak thresholds.
double percentile(std::vector<double> values, double p);

// --- synthetic networked SIR ----------------------------------------------

struct BetaPhase {
    double t_start;
    double beta;
};

struct SynthConfig {
    int regions = 8;
    int length  = 300;
    std::vector<std::vector<double>> coupling;  // regions x regions, zero diagonal
    std::vector<BetaPhase> beta_schedule = {{0.0, 0.3}};
    double gamma                         = 0.1;
    double population                    = 1e5;  // per region
    std::vector<double> initial_infected;        // per region; defaults if empty
    double noise_std                     = 0.0;  // absolute, in cases
    std::uint64_t seed                   = 0;
    double train_ratio                   = 0.6;
    double val_ratio                     = 0.2;
};

// Observations are per-step new infections plus Gaussian noise, clipped at 0.
// Coupling adds beta * S_v * (sum_u c_vu I_u) / P to region v's infections.
EpidemicDataset generate_synthetic(const SynthConfig& cfg);

}  // namespace earth
