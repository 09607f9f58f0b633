#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "earth/gltg.hpp"
#include "oracles.hpp"

using namespace earth;

namespace {

GltgParams random_params(std::mt19937_64& rng, int d)
{
    GltgParams p;
    p.w_g = oracles::random_tensor(rng, {d, d}, -0.5, 0.5);
    p.w1  = oracles::random_tensor(rng, {d, d}, -0.5, 0.5);
    p.b1  = oracles::random_tensor(rng, {1, d}, -0.5, 0.5);
    p.w2  = oracles::random_tensor(rng, {d, d}, -0.5, 0.5);
    p.b2  = oracles::random_tensor(rng, {1, d}, -0.5, 0.5);
    p.w3  = Tensor::scalar(1.0);
    p.b3  = Tensor::scalar(0.0);
    return p;
}

}  // namespace

TEST_CASE("dtw distance basics")
{
    std::mt19937_64 rng(2);
    for (int it = 0; it < 10; ++it) {
        auto x = oracles::random_values(rng, 8);
        CHECK(dtw_distance(x, x) == 0.0);
    }
    CHECK(dtw_distance({0, 1, 2}, {0, 1, 2, 2}) == 0.0);
    CHECK(dtw_distance({0}, {5}) == 5.0);
    CHECK_THROWS_AS(dtw_distance({}, {1.0}), std::invalid_argument);
}

TEST_CASE("dtw equals brute-force alignment enumeration")
{
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<int> len(1, 6);
    for (int it = 0; it < 60; ++it) {
        auto a = oracles::random_values(rng, len(rng), -3.0, 3.0);
        auto b = oracles::random_values(rng, len(rng), -3.0, 3.0);
        CHECK(dtw_distance(a, b) == doctest::Approx(oracles::dtw_brute_force(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("parallel dtw matrix matches serial bitwise")
{
    std::mt19937_64 rng(14);
    std::vector<std::vector<double>> series;
    for (int i = 0; i < 9; ++i)
        series.push_back(oracles::random_values(rng, 40));
    auto ms = serial::dtw_distance_matrix(series);
    auto mp = dtw_distance_matrix(series);
    REQUIRE(ms.size() == mp.size());
    for (std::size_t i = 0; i < ms.size(); ++i)
        CHECK(ms[i] == mp[i]);
}

TEST_CASE("semantic adjacency")
{
    std::mt19937_64 rng(4);
    std::vector<std::vector<double>> series;
    for (int i = 0; i < 5; ++i)
        series.push_back(oracles::random_values(rng, 30));

    Tensor a({5, 5});
    a.mutable_data()[0 * 5 + 1] = 1.0;
    a.mutable_data()[1 * 5 + 0] = 1.0;
    a.mutable_data()[2 * 5 + 4] = 1.0;
    a.mutable_data()[4 * 5 + 2] = 1.0;

    SUBCASE("k = 0 leaves the geographic graph unchanged")
    {
        Tensor t = build_semantic_adjacency(a, series, 0);
        for (long i = 0; i < t.size(); ++i)
            CHECK(t.data()[i] == a.data()[i]);
    }

    SUBCASE("geographic edges always survive augmentation")
    {
        Tensor t = build_semantic_adjacency(a, series, 2);
        for (int u = 0; u < 5; ++u)
            for (int v = 0; v < 5; ++v)
                if (a.at(u, v) == 1.0)
                    CHECK(t.at(u, v) == 1.0);
    }

    SUBCASE("identical series, empty graph, k=1: one edge per row, lowest index")
    {
        std::vector<std::vector<double>> same(3, {1.0, 2.0, 3.0, 2.0});
        Tensor empty({3, 3});
        Tensor t = build_semantic_adjacency(empty, same, 1);
        // row v gains exactly the lowest-index u != v
        CHECK(t.at(0, 1) == 1.0);
        CHECK(t.at(1, 0) == 1.0);
        CHECK(t.at(2, 0) == 1.0);
        for (int v = 0; v < 3; ++v) {
            double row = 0;
            for (int u = 0; u < 3; ++u)
                row += t.at(v, u);
            CHECK(row == 1.0);
            CHECK(t.at(v, v) == 0.0);
        }
    }

    SUBCASE("k >= N is a config error")
    {
        CHECK_THROWS_AS(build_semantic_adjacency(a, series, 5), std::invalid_argument);
    }

    SUBCASE("top-k ranks are invariant under uniform scaling (no z-norm)")
    {
        auto scaled = series;
        for (auto& row : scaled)
            for (auto& v : row)
                v *= 2.0;
        Tensor t1 = build_semantic_adjacency(Tensor({5, 5}), series, 2, false);
        Tensor t2 = build_semantic_adjacency(Tensor({5, 5}), scaled, 2, false);
        for (long i = 0; i < t1.size(); ++i)
            CHECK(t1.data()[i] == t2.data()[i]);
    }
}

TEST_CASE("residual gnn")
{
    std::mt19937_64 rng(10);
    const int n = 4, d = 3;
    auto p   = random_params(rng, d);
    Tensor h = oracles::random_tensor(rng, {n, d});

    SUBCASE("zero weight passes the trend straight through")
    {
        auto p0 = p;
        p0.w_g  = Tensor::zeros({d, d});
        Tensor deg = degree_normalized(Tensor::full({n, n}, 1.0));
        Tensor out = residual_gnn(h, deg, p0);
        for (long i = 0; i < h.size(); ++i)
            CHECK(out.data()[i] == h.data()[i]);
    }

    SUBCASE("single region with a self edge normalizes to 1")
    {
        Tensor deg = degree_normalized(Tensor::matrix({{1}}));
        CHECK(deg.at(0, 0) == doctest::Approx(1.0));
        Tensor h1  = oracles::random_tensor(rng, {1, d});
        Tensor out = residual_gnn(h1, deg, p);
        Tensor want = add(relu(matmul(h1, p.w_g)), h1);
        for (long i = 0; i < out.size(); ++i)
            CHECK(out.data()[i] == want.data()[i]);
    }

    SUBCASE("permutation equivariance")
    {
        Tensor at = build_semantic_adjacency(
            Tensor({n, n}),
            {oracles::random_values(rng, 20), oracles::random_values(rng, 20),
             oracles::random_values(rng, 20), oracles::random_values(rng, 20)},
            2);
        Tensor deg = degree_normalized(at);
        Tensor out = residual_gnn(h, deg, p);

        const int perm[4] = {3, 1, 0, 2};
        Tensor hp({n, d}), atp({n, n});
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j)
                hp.mutable_data()[(long)i * d + j] = h.at(perm[i], j);
            for (int j = 0; j < n; ++j)
                atp.mutable_data()[(long)i * n + j] = at.at(perm[i], perm[j]);
        }
        Tensor outp = residual_gnn(hp, degree_normalized(atp), p);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j)
                CHECK(outp.at(i, j) == doctest::Approx(out.at(perm[i], j)).epsilon(1e-12));
    }
}

TEST_CASE("dynamic graph antisymmetry law")
{
    std::mt19937_64 rng(12);
    const int n = 5, d = 4;
    auto p = random_params(rng, d);

    for (int it = 0; it < 100; ++it) {
        Tensor h = oracles::random_tensor(rng, {n, d}, -3.0, 3.0);
        Tensor g = dynamic_graph(h, p);
        for (int i = 0; i < n; ++i) {
            CHECK(g.at(i, i) == 0.5);
            for (int j = 0; j < n; ++j) {
                CHECK(std::fabs(g.at(i, j) + g.at(j, i) - 1.0) < 1e-10);
                CHECK(g.at(i, j) > 0.0);
                CHECK(g.at(i, j) < 1.0);
            }
        }
    }

    SUBCASE("zero trend and biases give the indifferent graph")
    {
        auto p0 = random_params(rng, d);
        p0.b1   = Tensor::zeros({1, d});
        p0.b2   = Tensor::zeros({1, d});
        Tensor g = dynamic_graph(Tensor::zeros({n, d}), p0);
        for (double v : g.data())
            CHECK(v == 0.5);
    }
}

TEST_CASE("mask fusion")
{
    std::mt19937_64 rng(18);
    const int n = 4, d = 3;
    auto p = random_params(rng, d);

    Tensor a({n, n});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            a.mutable_data()[(long)i * n + j] = (i + j) % 2 == 1 ? 1.0 : 0.0;

    Tensor h     = oracles::random_tensor(rng, {n, d});
    Tensor a_dyn = dynamic_graph(h, p);

    SUBCASE("saturated mask limits")
    {
        auto ps = p;
        ps.w3   = Tensor::scalar(0.0);
        ps.b3   = Tensor::scalar(50.0);  // sigmoid -> 1: pure static
        auto ev = fuse_mask(a, a_dyn, ps);
        for (long i = 0; i < ev.e.size(); ++i)
            CHECK(std::fabs(ev.e.data()[i] - a.data()[i]) < 1e-12);

        ps.b3 = Tensor::scalar(-50.0);  // sigmoid -> 0: pure dynamic
        ev    = fuse_mask(a, a_dyn, ps);
        for (long i = 0; i < ev.e.size(); ++i)
            CHECK(std::fabs(ev.e.data()[i] - a_dyn.data()[i]) < 1e-12);
    }

    SUBCASE("fused weights stay between the static and dynamic entry")
    {
        for (int it = 0; it < 100; ++it) {
            Tensor ht = oracles::random_tensor(rng, {n, d}, -3.0, 3.0);
            Tensor dt = dynamic_graph(ht, p);
            auto ev   = fuse_mask(a, dt, p);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double lo = std::min(a.at(i, j), dt.at(i, j));
                    const double hi = std::max(a.at(i, j), dt.at(i, j));
                    CHECK(ev.e.at(i, j) >= lo);
                    CHECK(ev.e.at(i, j) <= hi);
                }
        }
    }

    SUBCASE("raising b3 moves every fused weight toward the static entry")
    {
        auto plo = p, phi = p;
        plo.b3 = Tensor::scalar(-0.7);
        phi.b3 = Tensor::scalar(0.9);
        auto elo = fuse_mask(a, a_dyn, plo);
        auto ehi = fuse_mask(a, a_dyn, phi);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double dist_lo = std::fabs(elo.e.at(i, j) - a.at(i, j));
                const double dist_hi = std::fabs(ehi.e.at(i, j) - a.at(i, j));
                CHECK(dist_hi <= dist_lo + 1e-15);
            }
    }
}

TEST_CASE("global trend field")
{
    std::mt19937_64 rng(25);
    const int n = 3, d = 2;
    auto p     = random_params(rng, d);
    Tensor h   = oracles::random_tensor(rng, {n, d});
    Tensor deg = degree_normalized(Tensor::full({n, n}, 1.0));

    SUBCASE("zero drive freezes the trend")
    {
        Tensor zero = Tensor::zeros({n, d});
        Tensor out  = global_trend_field(h, deg, p, &zero);
        for (double v : out.data())
            CHECK(v == 0.0);
    }

    SUBCASE("zero weight with unit drive reduces to the identity")
    {
        auto p0 = p;
        p0.w_g  = Tensor::zeros({d, d});
        Tensor ones = Tensor::full({n, d}, 1.0);
        Tensor out  = global_trend_field(h, deg, p0, &ones);
        REQUIRE(out.shape() == h.shape());
        for (long i = 0; i < h.size(); ++i)
            CHECK(out.data()[i] == h.data()[i]);
    }
}

TEST_CASE("dtw cache roundtrip")
{
    std::mt19937_64 rng(30);
    std::vector<std::vector<double>> series;
    for (int i = 0; i < 4; ++i)
        series.push_back(oracles::random_values(rng, 25));

    const auto hash = series_hash(series);
    auto m = dtw_distance_matrix(series);

    const std::string path = "dtw_cache_test.bin";
    write_dtw_cache(path, hash, m, 4);

    std::vector<double> readback;
    REQUIRE(read_dtw_cache(path, hash, readback, 4));
    for (std::size_t i = 0; i < m.size(); ++i)
        CHECK(readback[i] == m[i]);

    CHECK_FALSE(read_dtw_cache(path, hash ^ 1, readback, 4));
    CHECK_FALSE(read_dtw_cache("missing_file.bin", hash, readback, 4));
    std::remove(path.c_str());
}
