#pragma once

#include <string>
#include <vector>

#include "earth/config.hpp"
#include "earth/dataset.hpp"
#include "earth/model.hpp"

// Versioned binary checkpoint: magic header, little-endian 64-bit floats.
// Carries everything needed to reproduce forward passes bit-identically:
// config, normalizer statistics, the static graph, and all weights.

namespace earth {

struct Checkpoint {
    TrainConfig config;
    std::vector<std::string> region_names;
    Normalizer normalizer;
    Tensor adjacency;
    Tensor a_tilde_static;
    long epoch           = 0;
    double best_val_rmse = 0.0;
    ModelParams params;

    TransmissionGraph graph() const
    {
        return {adjacency, a_tilde_static, degree_normalized(a_tilde_static)};
    }
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace earth
