#include "earth/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace earth {

void visit_weights(ModelWeights& w, const std::function<void(const std::string&, Tensor&)>& f)
{
    f("enc_z.w", w.enc_z_w);
    f("enc_z.b", w.enc_z_b);
    f("enc_s.w", w.enc_s_w);
    f("enc_s.b", w.enc_s_b);
    f("enc_i.w", w.enc_i_w);
    f("enc_i.b", w.enc_i_b);
    f("enc_r.w", w.enc_r_w);
    f("enc_r.b", w.enc_r_b);
    f("enc_h.w", w.enc_h_w);
    f("enc_h.b", w.enc_h_b);
    f("psi.w1", w.eano.psi_w1);
    f("psi.b1", w.eano.psi_b1);
    f("psi.w2", w.eano.psi_w2);
    f("psi.b2", w.eano.psi_b2);
    f("w_trans", w.eano.w_trans);
    f("w_recov", w.eano.w_recov);
    f("gnn.w_g", w.gltg.w_g);
    f("dyn.w1", w.gltg.w1);
    f("dyn.b1", w.gltg.b1);
    f("dyn.w2", w.gltg.w2);
    f("dyn.b2", w.gltg.b2);
    f("mask.w3", w.gltg.w3);
    f("mask.b3", w.gltg.b3);
    for (std::size_t h = 0; h < w.attn.w_q.size(); ++h) {
        const std::string i = std::to_string(h);
        f("attn.q" + i, w.attn.w_q[h]);
        f("attn.k" + i, w.attn.w_k[h]);
        f("attn.v" + i, w.attn.w_v[h]);
    }
    f("attn.out", w.attn.w_out);
    f("head.w1", w.head.w1);
    f("head.b1", w.head.b1);
    f("head.w2", w.head.w2);
    f("head.b2", w.head.b2);
}

namespace {

ModelWeights make_weights(const ModelConfig& cfg, std::uint64_t seed)
{
    const int d = cfg.hidden;
    const int c = cfg.channels;
    if (d < 1 || c < 2)
        throw std::invalid_argument("model: hidden must be >= 1 and channels >= 2");
    if (cfg.n_heads < 1 || d % cfg.n_heads != 0)
        throw std::invalid_argument("model: hidden=" + std::to_string(d) +
                                    " not divisible by n_heads=" + std::to_string(cfg.n_heads));

    std::mt19937_64 rng(seed);
    auto uniform = [&rng](Shape shape, double bound) {
        std::uniform_real_distribution<double> dist(-bound, bound);
        Tensor t(std::move(shape));
        for (auto& v : t.mutable_data())
            v = dist(rng);
        return t;
    };
    auto linear = [&](int fan_in, int fan_out) {
        return uniform({fan_in, fan_out}, 1.0 / std::sqrt((double)fan_in));
    };
    // Weights inside the vector field get a damped init: the unrolled solver
    // amplifies any per-step gain > 1 exponentially over the window.
    auto field_linear = [&](int fan_in, int fan_out) {
        return uniform({fan_in, fan_out}, 0.1 / std::sqrt((double)fan_in));
    };
    auto bias = [&](int width) { return Tensor::zeros({1, width}); };

    ModelWeights w;
    w.enc_z_w = linear(c - 1, d);
    w.enc_z_b = bias(d);
    w.enc_s_w = linear(c - 1, d);
    w.enc_s_b = bias(d);
    w.enc_i_w = linear(c - 1, d);
    w.enc_i_b = bias(d);
    w.enc_r_w = linear(c - 1, d);
    w.enc_r_b = bias(d);
    w.enc_h_w = linear(c - 1, d);
    w.enc_h_b = bias(d);

    w.eano.psi_w1  = linear(d, d);
    w.eano.psi_b1  = bias(d);
    w.eano.psi_w2  = field_linear(d, d * c);
    w.eano.psi_b2  = bias(d * c);
    w.eano.w_trans = field_linear(2 * d, d);
    w.eano.w_recov = field_linear(d, d);

    w.gltg.w_g = field_linear(d, d);
    w.gltg.w1  = linear(d, d);
    w.gltg.b1  = bias(d);
    w.gltg.w2  = linear(d, d);
    w.gltg.b2  = bias(d);
    w.gltg.w3  = Tensor::scalar(1.0);
    w.gltg.b3  = Tensor::scalar(0.0);

    const int df = d / cfg.n_heads;
    w.attn.n_heads = cfg.n_heads;
    for (int h = 0; h < cfg.n_heads; ++h) {
        w.attn.w_q.push_back(linear(d, df));
        w.attn.w_k.push_back(linear(d, df));
        w.attn.w_v.push_back(linear(d, df));
    }
    w.attn.w_out = linear(d, d);

    w.head.w1 = linear(2 * d, d);
    w.head.b1 = bias(d);
    w.head.w2 = linear(d, 1);
    w.head.b2 = Tensor::zeros({1, 1});
    return w;
}

}  // namespace

ModelParams::ModelParams(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), weights_(make_weights(cfg, seed))
{
    rebuild_index();
}

ModelParams::ModelParams(const ModelParams& other) : cfg_(other.cfg_), weights_(other.weights_)
{
    // deep-copy buffers so optimizer steps on one copy cannot leak into another
    visit_weights(weights_, [](const std::string&, Tensor& t) {
        t = Tensor(t.shape(), {t.data().begin(), t.data().end()});
    });
    rebuild_index();
}

ModelParams& ModelParams::operator=(const ModelParams& other)
{
    if (this != &other) {
        ModelParams tmp(other);
        *this = std::move(tmp);
    }
    return *this;
}

ModelParams::ModelParams(ModelParams&& other) noexcept
    : cfg_(other.cfg_), weights_(std::move(other.weights_))
{
    rebuild_index();
}

ModelParams& ModelParams::operator=(ModelParams&& other) noexcept
{
    if (this != &other) {
        cfg_     = other.cfg_;
        weights_ = std::move(other.weights_);
        rebuild_index();
    }
    return *this;
}

void ModelParams::rebuild_index()
{
    names_.clear();
    slots_.clear();
    visit_weights(weights_, [this](const std::string& name, Tensor& t) {
        names_.push_back(name);
        slots_.push_back(&t);
    });
}

ModelWeights ModelParams::bind(GradientTape& tape) const
{
    ModelWeights bound = weights_;  // copies shapes/buffers; leaves replace them
    int uid = 0;
    visit_weights(bound, [&](const std::string&, Tensor& t) { t = tape.leaf(t, uid++); });
    return bound;
}

bool ModelParams::all_finite() const
{
    for (const Tensor* t : slots_)
        if (!t->all_finite())
            return false;
    return true;
}

TransmissionGraph build_transmission_graph(const EpidemicDataset& ds, int top_k,
                                           const std::string& cache_path)
{
    const int n = ds.regions();
    std::vector<std::vector<double>> train_series(n);
    for (int r = 0; r < n; ++r)
        train_series[r].assign(ds.series[r].begin() + ds.train.begin,
                               ds.series[r].begin() + ds.train.end);

    std::vector<double> dtw;
    if (top_k > 0) {
        const auto hash = series_hash(train_series);
        if (cache_path.empty() || !read_dtw_cache(cache_path, hash, dtw, n)) {
            dtw = dtw_distance_matrix(train_series, /*z_normalize=*/true);
            if (!cache_path.empty())
                write_dtw_cache(cache_path, hash, dtw, n);
        }
    } else {
        dtw.assign((long)n * n, 0.0);
    }

    TransmissionGraph g;
    g.a              = ds.adjacency;
    g.a_tilde_static = build_semantic_adjacency_from_dtw(ds.adjacency, dtw, n, top_k);
    g.deg_norm       = degree_normalized(g.a_tilde_static);
    return g;
}

ForwardResult forward_window(const ModelWeights& w, const ModelConfig& cfg,
                             const TransmissionGraph& graph, const WindowSample& sample,
                             const Normalizer& nm)
{
    const int n = (int)sample.x.size();
    if (n == 0 || sample.knot_times.size() < 2)
        throw std::invalid_argument("forward_window: empty window");
    // per-region control paths over the normalized observations
    std::vector<ControlPath> paths;
    paths.reserve(n);
    for (int r = 0; r < n; ++r) {
        std::vector<std::vector<double>> obs(sample.knot_times.size());
        for (std::size_t k = 0; k < sample.knot_times.size(); ++k)
            obs[k] = {nm.forward(r, sample.x[r][k])};
        paths.push_back(ControlPath::fit(sample.knot_times, obs));
    }
    const int c = paths.front().channels();
    if (c != cfg.channels)
        throw std::invalid_argument("forward_window: path channels " + std::to_string(c) +
                                    " do not match config channels " +
                                    std::to_string(cfg.channels));

    auto dqdt_at = [&](double t) {
        Tensor out({n, c});
        auto& v = out.mutable_data();
        for (int r = 0; r < n; ++r) {
            const auto dq = paths[r].derivative(t);
            for (int ch = 0; ch < c; ++ch)
                v[(long)r * c + ch] = dq[ch];
        }
        return out;
    };

    // initial states from the first observation of the window
    Tensor x0({n, 1});
    for (int r = 0; r < n; ++r)
        x0.mutable_data()[r] = nm.forward(r, sample.x[r][0]);
    auto encode = [&](const Tensor& ew, const Tensor& eb) {
        return add(matmul(x0, ew), broadcast_rows(eb, n));
    };
    LatentState init{encode(w.enc_z_w, w.enc_z_b), encode(w.enc_s_w, w.enc_s_b),
                     encode(w.enc_i_w, w.enc_i_b), encode(w.enc_r_w, w.enc_r_b),
                     encode(w.enc_h_w, w.enc_h_b)};

    VectorField field = [&](double t, const LatentState& y) -> LatentState {
        Tensor dqdt = dqdt_at(t);
        Tensor g    = temporal_drive(y.z, dqdt, w.eano);

        Tensor e_t;
        if (cfg.graph == GraphMode::fused) {
            Tensor a_dyn = dynamic_graph(y.h, w.gltg);
            e_t          = fuse_mask(graph.a, a_dyn, w.gltg).e;
            if (cfg.neighbor_threshold > 0.0) {
                Tensor gate(e_t.shape());
                auto& gv = gate.mutable_data();
                for (long i = 0; i < e_t.size(); ++i)
                    gv[i] = e_t.data()[i] >= cfg.neighbor_threshold ? 1.0 : 0.0;
                e_t = mul(e_t, gate);
            }
        } else {
            e_t = graph.a;
        }

        const Tensor* drive = cfg.drift == DriftMode::modulated ? &g : nullptr;
        SirDrift drift = sir_drift(y, e_t, w.eano, drive, cfg.drift, cfg.row_normalize);
        Tensor dh      = global_trend_field(y.h, graph.deg_norm, w.gltg, drive);
        return {g, drift.ds, drift.di, drift.dr, dh};
    };

    OdeConfig ode;
    ode.method                = cfg.solver;
    ode.substeps_per_interval = cfg.substeps;
    ode.t_start               = sample.knot_times.front();
    ode.t_end                 = sample.knot_times.back();
    ode.intervals             = (int)std::llround(ode.t_end - ode.t_start);

    Trajectory traj   = integrate(field, init, ode);
    LatentState end_state = traj.back().second;

    const Tensor& query = cfg.query == QueryMode::z ? end_state.z : end_state.h;
    Tensor fused        = cross_attention(query, {end_state.s, end_state.i, end_state.r}, w.attn);
    Tensor y            = predict(fused, end_state.z, w.head);

    Tensor penalty = Tensor::scalar(0.0);
    if (cfg.sparsity_l1 > 0.0 && cfg.graph == GraphMode::fused)
        penalty = scale(mean(abs(dynamic_graph(end_state.h, w.gltg))), cfg.sparsity_l1);

    return {y, penalty, end_state};
}

}  // namespace earth
