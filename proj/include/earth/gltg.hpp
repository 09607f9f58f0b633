#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "earth/tensor.hpp"

// Global-guided local transmission graph: DTW-augmented semantic adjacency,
// residual GNN trend encoder, dynamic asymmetric graph generation and
// mask-based fusion of static and dynamic transmission patterns.

namespace earth {

struct GltgParams {
    Tensor w_g;  // d x d, residual GNN weight
    Tensor w1;   // d x d
    Tensor b1;   // 1 x d
    Tensor w2;   // d x d
    Tensor b2;   // 1 x d
    Tensor w3;   // scalar mask gain
    Tensor b3;   // scalar mask bias
};

// Static graph data plus the per-evaluation dynamic products.
struct TransmissionGraph {
    Tensor a;               // N x N binary geographic adjacency, symmetric, zero diagonal
    Tensor a_tilde_static;  // DTW-augmented adjacency
    Tensor deg_norm;        // D^{-1/2} (A_tilde + I) D^{-1/2}, cached
};

struct DynamicGraphEval {
    Tensor a_dyn;  // entries in (0,1); a_dyn + a_dyn^T = J
    Tensor mask;   // entries in (0,1)
    Tensor e;      // fused weights, elementwise between a and a_dyn
};

// Classic dynamic-time-warping distance: absolute-difference local cost, full
// window, match/insert/delete steps.
double dtw_distance(const std::vector<double>& a, const std::vector<double>& b);

// All-pairs DTW over regions x length series. Pairs are independent; the
// OpenMP path fills the symmetric matrix in parallel. `z_normalize` rescales
// each series to zero mean / unit variance first.
std::vector<double> dtw_distance_matrix(const std::vector<std::vector<double>>& series,
                                        bool z_normalize = true);

namespace serial {
std::vector<double> dtw_distance_matrix(const std::vector<std::vector<double>>& series,
                                        bool z_normalize = true);
}

// A_tilde[v][u] = 1 if A[v][u] = 1, or u != v and u is among the k regions
// with the smallest DTW distance to v (ties broken by lowest index).
Tensor build_semantic_adjacency(const Tensor& a, const std::vector<std::vector<double>>& series,
                                int k, bool z_normalize = true);
Tensor build_semantic_adjacency_from_dtw(const Tensor& a, const std::vector<double>& dtw, int n,
                                         int k);

// D^{-1/2} (A_tilde + I) D^{-1/2}; self-loops keep isolated rows finite.
Tensor degree_normalized(const Tensor& a_tilde);

// relu(deg_norm * H * W_g) + H
Tensor residual_gnn(const Tensor& h, const Tensor& deg_norm, const GltgParams& p);

// A_dyn = sigmoid(tanh(M1 M2^T - M2 M1^T)) with M_i = tanh(H W_i + b_i).
Tensor dynamic_graph(const Tensor& h, const GltgParams& p);

// mask = sigmoid(w3 * a_dyn + b3); e = mask .* a + (J - mask) .* a_dyn.
DynamicGraphEval fuse_mask(const Tensor& a, const Tensor& a_dyn, const GltgParams& p);

// dH/dt = residual_gnn(H) .* g (or the GNN output alone when `drive` is null).
Tensor global_trend_field(const Tensor& h, const Tensor& deg_norm, const GltgParams& p,
                          const Tensor* drive);

// --- DTW cache file ---------------------------------------------------------
// Binary: magic "EDTW", u32 version, u64 series hash, u32 N, N*N f64 (LE).
std::uint64_t series_hash(const std::vector<std::vector<double>>& series);
void write_dtw_cache(const std::string& path, std::uint64_t hash,
                     const std::vector<double>& matrix, int n);
// Returns false when the file is missing or the hash does not match.
bool read_dtw_cache(const std::string& path, std::uint64_t hash, std::vector<double>& matrix,
                    int n);

}  // namespace earth
