#pragma once

#include <cstdint>
#include <string>

#include "earth/dataset.hpp"
#include "earth/model.hpp"

// Training configuration and the key=value config-file format. Keys mirror
// the field names below; '#' starts a comment.

namespace earth {

enum class PeakThresholdKind { percentile, absolute };

struct TrainConfig {
    double lr           = 1e-3;
    double momentum     = 0.9;
    double weight_decay = 1e-5;
    int hidden          = 64;
    int window          = 20;
    int horizon         = 5;
    int epochs          = 200;
    int batch           = 32;
    int repeats         = 5;
    int n_heads         = 4;
    int top_k           = 3;
    OdeMethod solver    = OdeMethod::rk4;
    int substeps        = 2;
    std::uint64_t seed  = 0;
    LossMode loss       = LossMode::mse;
    QueryMode query     = QueryMode::z;
    DriftMode drift     = DriftMode::modulated;
    GraphMode graph     = GraphMode::fused;

    int patience       = 20;  // early-stop patience on validation RMSE
    double train_ratio = 0.6;
    double val_ratio   = 0.2;
    double missing_rate = 0.0;

    PeakThresholdKind peak_threshold_kind = PeakThresholdKind::percentile;
    double peak_threshold_value           = 80.0;

    double neighbor_threshold = 0.0;
    double sparsity_l1        = 0.0;
    std::string dtw_cache;

    ModelConfig model_config() const;
    void validate() const;
};

// `peak_threshold` accepts "percentile:P" or "absolute:V".
void apply_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value);
TrainConfig parse_config_file(const std::string& path);

// Synthetic-dataset recipe for the `synth` subcommand. Same file format.
struct SynthFileConfig {
    SynthConfig synth;
    std::string coupling_topology = "ring";  // ring | full | none
    double coupling_strength      = 0.2;
    double noise_pct_of_peak      = 0.0;  // overrides noise_std when > 0
};

SynthFileConfig parse_synth_config_file(const std::string& path);

// Expands topology/strength into the coupling matrix and resolves
// peak-relative noise (two-pass: noiseless peak first).
SynthConfig resolve_synth_config(const SynthFileConfig& fc);

std::string to_string(OdeMethod m);
std::string to_string(LossMode m);
std::string to_string(QueryMode m);
std::string to_string(DriftMode m);
std::string to_string(GraphMode m);

}  // namespace earth
