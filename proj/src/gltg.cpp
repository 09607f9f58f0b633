#include "earth/gltg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace earth {

namespace {

std::vector<double> z_normalized(const std::vector<double>& s)
{
    double mean = 0.0;
    for (double v : s)
        mean += v;
    mean /= (double)s.size();
    double var = 0.0;
    for (double v : s)
        var += (v - mean) * (v - mean);
    const double sd = std::max(std::sqrt(var / (double)s.size()), 1e-8);
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        out[i] = (s[i] - mean) / sd;
    return out;
}

void dtw_fill(const std::vector<std::vector<double>>& prepped, std::vector<double>& m, int n,
              int row)
{
    for (int v = row + 1; v < n; ++v) {
        const double d       = dtw_distance(prepped[row], prepped[v]);
        m[(long)row * n + v] = d;
        m[(long)v * n + row] = d;
    }
}

}  // namespace

double dtw_distance(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.empty() || b.empty())
        throw std::invalid_argument("dtw_distance: empty series");

    const std::size_t nb = b.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    // rolling rows of the DP table
    std::vector<double> prev(nb, inf), cur(nb, inf);

    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < nb; ++j) {
            const double cost = std::fabs(a[i] - b[j]);
            double best;
            if (i == 0 && j == 0)
                best = 0.0;
            else if (i == 0)
                best = cur[j - 1];
            else if (j == 0)
                best = prev[j];
            else
                best = std::min({prev[j], cur[j - 1], prev[j - 1]});
            cur[j] = cost + best;
        }
        std::swap(prev, cur);
    }
    return prev[nb - 1];
}

namespace serial {

std::vector<double> dtw_distance_matrix(const std::vector<std::vector<double>>& series,
                                        bool z_normalize)
{
    const int n = (int)series.size();
    std::vector<std::vector<double>> prepped(n);
    for (int i = 0; i < n; ++i)
        prepped[i] = z_normalize ? z_normalized(series[i]) : series[i];

    std::vector<double> m((long)n * n, 0.0);
    for (int u = 0; u < n; ++u)
        dtw_fill(prepped, m, n, u);
    return m;
}

}  // namespace serial

std::vector<double> dtw_distance_matrix(const std::vector<std::vector<double>>& series,
                                        bool z_normalize)
{
#ifdef _OPENMP
    const int n = (int)series.size();
    std::vector<std::vector<double>> prepped(n);
    for (int i = 0; i < n; ++i)
        prepped[i] = z_normalize ? z_normalized(series[i]) : series[i];

    std::vector<double> m((long)n * n, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (int u = 0; u < n; ++u)
        dtw_fill(prepped, m, n, u);
    return m;
#else
    return serial::dtw_distance_matrix(series, z_normalize);
#endif
}

Tensor build_semantic_adjacency_from_dtw(const Tensor& a, const std::vector<double>& dtw, int n,
                                         int k)
{
    if (k >= n)
        throw std::invalid_argument("build_semantic_adjacency: k=" + std::to_string(k) +
                                    " must be smaller than region count " + std::to_string(n));
    if (a.rows() != n || a.cols() != n)
        throw std::invalid_argument("build_semantic_adjacency: adjacency " +
                                    shape_str(a.shape()) + " does not match " +
                                    std::to_string(n) + " regions");

    Tensor augmented({n, n});
    auto& e = augmented.mutable_data();
    for (int v = 0; v < n; ++v) {
        for (int u = 0; u < n; ++u)
            e[(long)v * n + u] = a.at(v, u) != 0.0 ? 1.0 : 0.0;

        // k nearest by DTW, ties broken by lowest index
        std::vector<int> cand;
        cand.reserve(n - 1);
        for (int u = 0; u < n; ++u)
            if (u != v)
                cand.push_back(u);
        std::stable_sort(cand.begin(), cand.end(), [&](int x, int y) {
            return dtw[(long)v * n + x] < dtw[(long)v * n + y];
        });
        for (int i = 0; i < k; ++i)
            e[(long)v * n + cand[i]] = 1.0;
    }
    return augmented;
}

Tensor build_semantic_adjacency(const Tensor& a, const std::vector<std::vector<double>>& series,
                                int k, bool z_normalize)
{
    const int n = (int)series.size();
    return build_semantic_adjacency_from_dtw(a, dtw_distance_matrix(series, z_normalize), n, k);
}

Tensor degree_normalized(const Tensor& a_tilde)
{
    const int n = a_tilde.rows();
    Tensor out({n, n});
    std::vector<double> deg(n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            deg[i] += a_tilde.at(i, j);
        deg[i] += 1.0;  // self-loop
    }
    auto& d = out.mutable_data();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double aij = a_tilde.at(i, j) + (i == j ? 1.0 : 0.0);
            d[(long)i * n + j] = aij / std::sqrt(deg[i] * deg[j]);
        }
    return out;
}

Tensor residual_gnn(const Tensor& h, const Tensor& deg_norm, const GltgParams& p)
{
    return add(relu(matmul(matmul(deg_norm, h), p.w_g)), h);
}

Tensor dynamic_graph(const Tensor& h, const GltgParams& p)
{
    const int n = h.rows();
    Tensor m1 = tanh(add(matmul(h, p.w1), broadcast_rows(p.b1, n)));
    Tensor m2 = tanh(add(matmul(h, p.w2), broadcast_rows(p.b2, n)));
    Tensor skew = sub(matmul(m1, transpose(m2)), matmul(m2, transpose(m1)));
    return sigmoid(tanh(skew));
}

DynamicGraphEval fuse_mask(const Tensor& a, const Tensor& a_dyn, const GltgParams& p)
{
    if (a.shape() != a_dyn.shape())
        throw std::invalid_argument("fuse_mask: shapes differ (" + shape_str(a.shape()) + " vs " +
                                    shape_str(a_dyn.shape()) + ")");
    DynamicGraphEval out;
    out.a_dyn = a_dyn;
    out.mask  = sigmoid(add(mul(p.w3, a_dyn), p.b3));
    // (J - M) via scalar broadcast of the all-ones matrix
    out.e = add(mul(out.mask, a), mul(sub(Tensor::scalar(1.0), out.mask), a_dyn));
    return out;
}

Tensor global_trend_field(const Tensor& h, const Tensor& deg_norm, const GltgParams& p,
                          const Tensor* drive)
{
    Tensor out = residual_gnn(h, deg_norm, p);
    return drive ? mul(out, *drive) : out;
}

// --- DTW cache ---------------------------------------------------------

std::uint64_t series_hash(const std::vector<std::vector<double>>& series)
{
    // FNV-1a over the raw bytes plus the row structure
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, std::size_t len) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    const std::uint64_t rows = series.size();
    mix(&rows, sizeof rows);
    for (const auto& row : series) {
        const std::uint64_t len = row.size();
        mix(&len, sizeof len);
        mix(row.data(), row.size() * sizeof(double));
    }
    return h;
}

namespace {
constexpr char kDtwMagic[4] = {'E', 'D', 'T', 'W'};
constexpr std::uint32_t kDtwVersion = 1;
}  // namespace

void write_dtw_cache(const std::string& path, std::uint64_t hash,
                     const std::vector<double>& matrix, int n)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error("dtw cache: cannot open " + path + " for writing");
    const std::uint32_t nn = (std::uint32_t)n;
    f.write(kDtwMagic, 4);
    f.write(reinterpret_cast<const char*>(&kDtwVersion), sizeof kDtwVersion);
    f.write(reinterpret_cast<const char*>(&hash), sizeof hash);
    f.write(reinterpret_cast<const char*>(&nn), sizeof nn);
    f.write(reinterpret_cast<const char*>(matrix.data()), (long)n * n * sizeof(double));
}

bool read_dtw_cache(const std::string& path, std::uint64_t hash, std::vector<double>& matrix,
                    int n)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        return false;
    char magic[4];
    std::uint32_t version = 0, nn = 0;
    std::uint64_t stored = 0;
    f.read(magic, 4);
    f.read(reinterpret_cast<char*>(&version), sizeof version);
    f.read(reinterpret_cast<char*>(&stored), sizeof stored);
    f.read(reinterpret_cast<char*>(&nn), sizeof nn);
    if (!f || std::memcmp(magic, kDtwMagic, 4) != 0 || version != kDtwVersion || stored != hash ||
        nn != (std::uint32_t)n)
        return false;
    matrix.resize((long)n * n);
    f.read(reinterpret_cast<char*>(matrix.data()), (long)n * n * sizeof(double));
    return (bool)f;
}

}  // namespace earth
