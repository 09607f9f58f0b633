#include "earth/fusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace earth {

namespace {

void check_attention(const Tensor& query, const AttentionParams& p)
{
    const int d = query.cols();
    if (p.n_heads < 1 || d % p.n_heads != 0)
        throw std::invalid_argument("cross_attention: d=" + std::to_string(d) +
                                    " is not divisible by n_heads=" + std::to_string(p.n_heads));
    if ((int)p.w_q.size() != p.n_heads || (int)p.w_k.size() != p.n_heads ||
        (int)p.w_v.size() != p.n_heads)
        throw std::invalid_argument("cross_attention: projection count does not match n_heads");
}

// softmax over the three per-token score columns for one head
Tensor head_weights(const Tensor& query, const std::array<Tensor, 3>& tokens, const Tensor& wq,
                    const Tensor& wk, double inv_sqrt_df)
{
    Tensor q = matmul(query, wq);  // N x d_f
    Tensor scores;
    for (int t = 0; t < 3; ++t) {
        Tensor k = matmul(tokens[t], wk);
        Tensor s = scale(row_sums(mul(q, k)), inv_sqrt_df);  // N x 1
        scores   = t == 0 ? s : concat_last_axis(scores, s);
    }
    return softmax_rows(scores);  // N x 3
}

}  // namespace

std::vector<Tensor> attention_weights(const Tensor& query, const std::array<Tensor, 3>& tokens,
                                      const AttentionParams& p)
{
    check_attention(query, p);
    const double inv_sqrt_df = 1.0 / std::sqrt((double)(query.cols() / p.n_heads));
    std::vector<Tensor> out;
    out.reserve(p.n_heads);
    for (int hd = 0; hd < p.n_heads; ++hd)
        out.push_back(head_weights(query, tokens, p.w_q[hd], p.w_k[hd], inv_sqrt_df));
    return out;
}

Tensor cross_attention(const Tensor& query, const std::array<Tensor, 3>& tokens,
                       const AttentionParams& p)
{
    check_attention(query, p);
    const double inv_sqrt_df = 1.0 / std::sqrt((double)(query.cols() / p.n_heads));

    Tensor heads;
    for (int hd = 0; hd < p.n_heads; ++hd) {
        Tensor att = head_weights(query, tokens, p.w_q[hd], p.w_k[hd], inv_sqrt_df);
        Tensor acc;
        for (int t = 0; t < 3; ++t) {
            Tensor v      = matmul(tokens[t], p.w_v[hd]);       // N x d_f
            Tensor picked = scale_rows(v, slice_cols(att, t, 1));
            acc           = t == 0 ? picked : add(acc, picked);
        }
        heads = hd == 0 ? acc : concat_last_axis(heads, acc);
    }
    return matmul(heads, p.w_out);
}

Tensor predict(const Tensor& fused, const Tensor& z, const HeadParams& p)
{
    if (fused.rows() != z.rows() || fused.cols() != z.cols())
        throw std::invalid_argument("predict: fused " + shape_str(fused.shape()) +
                                    " and temporal " + shape_str(z.shape()) + " shapes differ");
    const int n   = fused.rows();
    Tensor hidden = relu(add(matmul(concat_last_axis(fused, z), p.w1), broadcast_rows(p.b1, n)));
    return add(matmul(hidden, p.w2), broadcast_rows(p.b2, n));  // N x 1
}

Tensor loss(const Tensor& pred, const Tensor& truth, LossMode mode)
{
    if (pred.shape() != truth.shape())
        throw std::invalid_argument("loss: prediction " + shape_str(pred.shape()) +
                                    " and truth " + shape_str(truth.shape()) + " shapes differ");
    Tensor resid = sub(pred, truth);
    return mode == LossMode::mse ? mean(mul(resid, resid)) : mean(abs(resid));
}

}  // namespace earth
