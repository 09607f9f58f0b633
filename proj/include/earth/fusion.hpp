#pragma once

#include <array>
#include <vector>

#include "earth/tensor.hpp"

// Multi-head cross-attention fusing the global trend with the per-region
// disease states, the prediction head, and the training losses.

namespace earth {

struct AttentionParams {
    int n_heads = 4;
    std::vector<Tensor> w_q;  // per head, d x d_f with d_f = d / n_heads
    std::vector<Tensor> w_k;
    std::vector<Tensor> w_v;
    Tensor w_out;  // d x d
};

struct HeadParams {
    Tensor w1;  // 2d x hidden
    Tensor b1;  // 1 x hidden
    Tensor w2;  // hidden x 1
    Tensor b2;  // 1 x 1
};

enum class LossMode { mse, mae };

// Per-region attention over the three disease-state tokens {S, I, R}.
// `query` is N x d; each token is N x d. Output is N x d.
Tensor cross_attention(const Tensor& query, const std::array<Tensor, 3>& tokens,
                       const AttentionParams& p);

// Exposes the post-softmax weights (N x 3 per head) for diagnostics/tests.
std::vector<Tensor> attention_weights(const Tensor& query, const std::array<Tensor, 3>& tokens,
                                      const AttentionParams& p);

// y_v = MLP([F_v || Z_v]) with a ReLU hidden layer; output N x 1 in
// normalized units.
Tensor predict(const Tensor& fused, const Tensor& z, const HeadParams& p);

// mse: mean of squared residuals; mae: mean of absolute residuals.
Tensor loss(const Tensor& pred, const Tensor& truth, LossMode mode);

}  // namespace earth
