#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "earth/dataset.hpp"
#include "earth/eano.hpp"
#include "earth/fusion.hpp"
#include "earth/gltg.hpp"
#include "earth/ode.hpp"
#include "earth/spline.hpp"
#include "earth/tensor.hpp"

// Assembles the full forecasting model: control paths drive a joint ODE over
// {Z, S, I, R, H}, the trend state generates the dynamic transmission graph,
// and cross-attention plus an MLP head pool the prediction.

namespace earth {

enum class QueryMode { z, h };
enum class GraphMode { fused, static_only };

// Structural knobs consumed by the forward pass.
struct ModelConfig {
    int hidden   = 64;  // d
    int channels = 2;   // c: time + one observation channel
    int n_heads  = 4;
    OdeMethod solver   = OdeMethod::rk4;
    int substeps       = 2;
    DriftMode drift    = DriftMode::modulated;
    QueryMode query    = QueryMode::z;
    GraphMode graph    = GraphMode::fused;
    bool row_normalize = true;
    // zero out fused weights below this value before aggregation (0 = off)
    double neighbor_threshold = 0.0;
    // L1 coefficient on the dynamic graph at the window end (0 = off)
    double sparsity_l1 = 0.0;
};

// Every learnable tensor. Encoders map the first observation of a window to
// the five initial states.
struct ModelWeights {
    Tensor enc_z_w, enc_z_b;
    Tensor enc_s_w, enc_s_b;
    Tensor enc_i_w, enc_i_b;
    Tensor enc_r_w, enc_r_b;
    Tensor enc_h_w, enc_h_b;
    EanoParams eano;
    GltgParams gltg;
    AttentionParams attn;
    HeadParams head;
};

// Flat, ordered view over the weights; uid is the position in this order.
class ModelParams {
public:
    ModelParams() = default;
    ModelParams(const ModelConfig& cfg, std::uint64_t seed);

    // slots_ points into weights_, so copies/moves must re-index
    ModelParams(const ModelParams& other);
    ModelParams& operator=(const ModelParams& other);
    ModelParams(ModelParams&& other) noexcept;
    ModelParams& operator=(ModelParams&& other) noexcept;

    const ModelConfig& config() const { return cfg_; }
    ModelWeights& weights() { return weights_; }
    const ModelWeights& weights() const { return weights_; }

    int count() const { return (int)names_.size(); }
    const std::string& name(int uid) const { return names_.at(uid); }
    Tensor& value(int uid) { return *slots_.at(uid); }
    const Tensor& value(int uid) const { return *slots_.at(uid); }

    // Leaf copies of every weight on `tape`, uids preserved.
    ModelWeights bind(GradientTape& tape) const;

    bool all_finite() const;

private:
    void rebuild_index();

    ModelConfig cfg_;
    ModelWeights weights_;
    std::vector<std::string> names_;
    std::vector<Tensor*> slots_;
};

// Enumerates (name, tensor) slots in uid order.
void visit_weights(ModelWeights& w, const std::function<void(const std::string&, Tensor&)>& f);

// Builds the static graph data; DTW runs on the z-normalized training-split
// series and is cached at `cache_path` when given.
TransmissionGraph build_transmission_graph(const EpidemicDataset& ds, int top_k,
                                           const std::string& cache_path = "");

struct ForwardResult {
    Tensor prediction;   // N x 1, normalized units
    Tensor penalty;      // scalar regularizer (zero when disabled)
    LatentState final_state;
};

// Runs one window through the model. Weights may be tape-bound leaves (for
// training) or the master copies (for inference).
ForwardResult forward_window(const ModelWeights& w, const ModelConfig& cfg,
                             const TransmissionGraph& graph, const WindowSample& sample,
                             const Normalizer& nm);

}  // namespace earth
