#include "earth/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace earth {

namespace {

double now_seconds()
{
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

Tensor target_tensor(const WindowSample& sample, const Normalizer& nm)
{
    const int n = (int)sample.target.size();
    Tensor t({n, 1});
    for (int r = 0; r < n; ++r)
        t.mutable_data()[r] = nm.forward(r, sample.target[r]);
    return t;
}

// forward + loss for one sample on a fresh tape
struct SampleGrad {
    double loss_value = 0.0;
    GradMap grads;
};

SampleGrad sample_gradient(const ModelParams& params, const ModelConfig& mcfg,
                           const TransmissionGraph& graph, const WindowSample& sample,
                           const Normalizer& nm, LossMode loss_mode)
{
    GradientTape tape;
    ModelWeights bound = params.bind(tape);
    ForwardResult fw   = forward_window(bound, mcfg, graph, sample, nm);
    Tensor l           = loss(fw.prediction, target_tensor(sample, nm), loss_mode);
    if (fw.penalty.on_tape() || fw.penalty.value() != 0.0)
        l = add(l, fw.penalty);
    SampleGrad out;
    out.loss_value = l.value();
    out.grads      = tape.backward(l);
    return out;
}

std::vector<double> predict_raw(const ModelParams& params, const ModelConfig& mcfg,
                                const TransmissionGraph& graph, const WindowSample& sample,
                                const Normalizer& nm)
{
    ForwardResult fw = forward_window(params.weights(), mcfg, graph, sample, nm);
    const int n      = fw.prediction.rows();
    std::vector<double> out(n);
    for (int r = 0; r < n; ++r)
        out[r] = nm.inverse(r, fw.prediction.at(r, 0));
    return out;
}

double validation_rmse(const ModelParams& params, const ModelConfig& mcfg,
                       const TransmissionGraph& graph, const std::vector<WindowSample>& windows,
                       const Normalizer& nm)
{
    std::vector<double> pred, truth;
    for (const auto& w : windows) {
        auto p = predict_raw(params, mcfg, graph, w, nm);
        pred.insert(pred.end(), p.begin(), p.end());
        truth.insert(truth.end(), w.target.begin(), w.target.end());
    }
    return rmse(pred, truth);
}

std::vector<double> peak_thresholds(const EpidemicDataset& ds, const TrainConfig& cfg)
{
    const int n = ds.regions();
    std::vector<double> thr(n);
    if (cfg.peak_threshold_kind == PeakThresholdKind::absolute) {
        std::fill(thr.begin(), thr.end(), cfg.peak_threshold_value);
    } else {
        for (int r = 0; r < n; ++r) {
            std::vector<double> train_vals(ds.series[r].begin() + ds.train.begin,
                                           ds.series[r].begin() + ds.train.end);
            thr[r] = percentile(std::move(train_vals), cfg.peak_threshold_value);
        }
    }
    return thr;
}

}  // namespace

std::string format_record(const MetricsRecord& rec)
{
    std::ostringstream os;
    os.precision(6);
    os << "dataset=" << rec.dataset << " horizon=" << rec.horizon << " seed=" << rec.seed
       << " rmse=" << rec.rmse << " peak_time_error=";
    if (rec.peak_time_error)
        os << *rec.peak_time_error;
    else
        os << "n/a";
    os << " rmse_persistence=" << rec.rmse_persistence << " peak_time_error_persistence=";
    if (rec.peak_time_error_persistence)
        os << *rec.peak_time_error_persistence;
    else
        os << "n/a";
    os << " wall_time=" << rec.wall_time_s;
    return os.str();
}

void sgd_step(ModelParams& params, const GradMap& grads, const TrainConfig& cfg,
              std::vector<Tensor>& velocity)
{
    if (velocity.empty()) {
        velocity.reserve(params.count());
        for (int uid = 0; uid < params.count(); ++uid)
            velocity.push_back(Tensor::zeros(params.value(uid).shape()));
    }
    if ((int)velocity.size() != params.count())
        throw std::logic_error("sgd_step: velocity/parameter mismatch");

    for (int uid = 0; uid < params.count(); ++uid) {
        auto it = grads.find(uid);
        if (it == grads.end())
            continue;  // structurally unused parameter this step
        const Tensor& g = it->second;
        if (!g.all_finite())
            throw std::runtime_error("sgd_step: non-finite gradient for parameter '" +
                                     params.name(uid) + "'");
        auto& p = params.value(uid).mutable_data();
        auto& v = velocity[uid].mutable_data();
        const auto gv = g.data();
        for (std::size_t i = 0; i < p.size(); ++i) {
            v[i] = cfg.momentum * v[i] + (gv[i] + cfg.weight_decay * p[i]);
            p[i] -= cfg.lr * v[i];
        }
    }
}

TrainResult train(const EpidemicDataset& dataset, const TrainConfig& cfg, std::ostream* log)
{
    cfg.validate();

    EpidemicDataset ds = dataset;
    assign_splits(ds, cfg.train_ratio, cfg.val_ratio);

    const ModelConfig mcfg  = cfg.model_config();
    TransmissionGraph graph = build_transmission_graph(ds, cfg.top_k, cfg.dtw_cache);
    Normalizer nm           = Normalizer::fit(ds);

    auto train_windows = make_windows(ds, Split::train, cfg.window, cfg.horizon,
                                      cfg.missing_rate, cfg.seed);
    auto val_windows = make_windows(ds, Split::val, cfg.window, cfg.horizon, cfg.missing_rate,
                                    cfg.seed + 1);

    ModelParams params(mcfg, cfg.seed);
    std::vector<Tensor> velocity;

    TrainResult result;
    result.checkpoint.config         = cfg;
    result.checkpoint.region_names   = ds.region_names;
    result.checkpoint.normalizer     = nm;
    result.checkpoint.adjacency      = ds.adjacency;
    result.checkpoint.a_tilde_static = graph.a_tilde_static;
    result.checkpoint.params         = params;
    result.checkpoint.best_val_rmse  = std::numeric_limits<double>::infinity();
    result.checkpoint.epoch          = 0;

    if (cfg.epochs == 0)
        return result;  // checkpoint equals initialization

    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x5851f42d4c957f2dull);
    std::vector<int> order(train_windows.size());
    std::iota(order.begin(), order.end(), 0);

    int since_best = 0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_loss = 0.0;
        long batches      = 0;
        bool bad_loss     = false;

        for (std::size_t at = 0; at < order.size() && !bad_loss; at += cfg.batch) {
            const int bsz = (int)std::min((std::size_t)cfg.batch, order.size() - at);
            std::vector<SampleGrad> grads((std::size_t)bsz);
            std::vector<std::exception_ptr> errors((std::size_t)bsz);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
            for (int b = 0; b < bsz; ++b) {
                try {
                    grads[b] = sample_gradient(params, mcfg, graph, train_windows[order[at + b]],
                                               nm, cfg.loss);
                } catch (...) {
                    errors[b] = std::current_exception();
                }
            }
            for (int b = 0; b < bsz; ++b) {
                if (!errors[b])
                    continue;
                try {
                    std::rethrow_exception(errors[b]);
                } catch (const std::runtime_error&) {
                    bad_loss = true;  // divergence: abort, keep last good checkpoint
                } catch (...) {
                    throw;  // contract violations propagate
                }
            }
            if (bad_loss)
                break;

            // deterministic merge in sample-index order, averaged over the batch
            GradMap merged;
            double batch_loss = 0.0;
            for (int b = 0; b < bsz; ++b) {
                batch_loss += grads[b].loss_value;
                for (auto& [uid, g] : grads[b].grads) {
                    auto it = merged.find(uid);
                    if (it == merged.end())
                        merged.emplace(uid, g);
                    else
                        it->second = add(it->second, g);
                }
            }
            for (auto& [uid, g] : merged)
                g = scale(g, 1.0 / bsz);
            batch_loss /= bsz;

            if (!std::isfinite(batch_loss)) {
                bad_loss = true;
                break;
            }
            sgd_step(params, merged, cfg, velocity);
            epoch_loss += batch_loss;
            ++batches;
        }

        if (bad_loss || !params.all_finite()) {
            result.diverged = true;
            if (log)
                (*log) << "epoch=" << epoch << " diverged; keeping last good checkpoint\n";
            break;
        }

        epoch_loss /= std::max(batches, 1L);
        const double val = validation_rmse(params, mcfg, graph, val_windows, nm);
        result.history.push_back({epoch, epoch_loss, val});
        if (log)
            (*log) << "epoch=" << epoch << " train_loss=" << epoch_loss << " val_rmse=" << val
                   << "\n";

        if (val < result.checkpoint.best_val_rmse) {
            result.checkpoint.best_val_rmse = val;
            result.checkpoint.params        = params;
            result.checkpoint.epoch         = epoch;
            since_best                      = 0;
        } else if (++since_best > cfg.patience) {
            if (log)
                (*log) << "early stop at epoch " << epoch << " (patience " << cfg.patience
                       << ")\n";
            break;
        }
    }
    return result;
}

MetricsRecord evaluate(const Checkpoint& ckpt, const EpidemicDataset& dataset, int horizon,
                       const std::string& dataset_name)
{
    if (ckpt.region_names != dataset.region_names)
        throw std::logic_error("evaluate: checkpoint and dataset regions differ");

    const double t0 = now_seconds();
    const TrainConfig& cfg = ckpt.config;

    EpidemicDataset ds = dataset;
    assign_splits(ds, cfg.train_ratio, cfg.val_ratio);

    const ModelConfig mcfg  = cfg.model_config();
    TransmissionGraph graph = ckpt.graph();

    auto windows = make_windows(ds, Split::test, cfg.window, horizon, cfg.missing_rate,
                                cfg.seed + 2);

    const auto thr = peak_thresholds(ds, cfg);
    std::vector<double> pred, persist, truth, thresholds;
    for (const auto& w : windows) {
        auto p = predict_raw(ckpt.params, mcfg, graph, w, ckpt.normalizer);
        for (int r = 0; r < (int)p.size(); ++r) {
            pred.push_back(p[r]);
            persist.push_back(w.x[r].back());  // last observed value
            truth.push_back(w.target[r]);
            thresholds.push_back(thr[r]);
        }
    }

    MetricsRecord rec;
    rec.dataset                     = dataset_name;
    rec.horizon                     = horizon;
    rec.seed                        = cfg.seed;
    rec.rmse                        = rmse(pred, truth);
    rec.peak_time_error             = peak_time_error(pred, truth, thresholds);
    rec.rmse_persistence            = rmse(persist, truth);
    rec.peak_time_error_persistence = peak_time_error(persist, truth, thresholds);
    rec.wall_time_s                 = now_seconds() - t0;
    return rec;
}

std::vector<double> forecast(const Checkpoint& ckpt, const EpidemicDataset& dataset)
{
    if (ckpt.region_names != dataset.region_names)
        throw std::logic_error("forecast: checkpoint and dataset regions differ");
    const TrainConfig& cfg = ckpt.config;
    const int len          = dataset.length();
    if (len < cfg.window)
        throw std::invalid_argument("forecast: series shorter than the model window");

    WindowSample sample;
    sample.start = len - cfg.window;
    sample.knot_times.resize(cfg.window);
    for (int i = 0; i < cfg.window; ++i)
        sample.knot_times[i] = i;
    sample.x.resize(dataset.regions());
    for (int r = 0; r < dataset.regions(); ++r)
        sample.x[r].assign(dataset.series[r].end() - cfg.window, dataset.series[r].end());

    return predict_raw(ckpt.params, cfg.model_config(), ckpt.graph(), sample, ckpt.normalizer);
}

RepeatSummary run_repeats(const EpidemicDataset& dataset, const TrainConfig& cfg,
                          std::ostream* log)
{
    RepeatSummary summary;
    std::vector<double> rmses, ptes;
    for (int rep = 0; rep < cfg.repeats; ++rep) {
        TrainConfig c = cfg;
        c.seed        = cfg.seed + (std::uint64_t)rep;
        auto result   = train(dataset, c, log);
        auto rec      = evaluate(result.checkpoint, dataset, c.horizon);
        if (log)
            (*log) << format_record(rec) << "\n";
        rmses.push_back(rec.rmse);
        if (rec.peak_time_error)
            ptes.push_back(*rec.peak_time_error);
        summary.rmse_persistence = rec.rmse_persistence;  // seed-independent
        summary.runs.push_back(std::move(rec));
    }

    auto mean_std = [](const std::vector<double>& xs, double& mean, double& sd) {
        if (xs.empty()) {
            mean = sd = 0.0;
            return;
        }
        mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
        double var = 0.0;
        for (double x : xs)
            var += (x - mean) * (x - mean);
        sd = std::sqrt(var / xs.size());
    };
    mean_std(rmses, summary.rmse_mean, summary.rmse_std);
    mean_std(ptes, summary.pte_mean, summary.pte_std);
    summary.pte_count = (int)ptes.size();
    return summary;
}

GradcheckReport gradcheck(std::uint64_t seed, int regions, int hidden, int window)
{
    // tiny synthetic dataset; only the first training window is used
    SynthConfig scfg;
    scfg.regions          = regions;
    scfg.length           = std::max(4 * window, 24);
    scfg.population       = 1e4;
    scfg.noise_std        = 0.5;
    scfg.seed             = seed;
    scfg.beta_schedule    = {{0.0, 0.25}};
    scfg.initial_infected.assign(regions, 5.0);
    for (int r = 0; r < regions; ++r)
        scfg.initial_infected[r] += r;
    scfg.coupling.assign(regions, std::vector<double>(regions, 0.1));
    for (int r = 0; r < regions; ++r)
        scfg.coupling[r][r] = 0.0;
    EpidemicDataset ds = generate_synthetic(scfg);

    TrainConfig cfg;
    cfg.hidden  = hidden;
    cfg.window  = window;
    cfg.horizon = 2;
    cfg.n_heads = hidden % 4 == 0 ? 2 : 1;
    cfg.top_k   = regions > 1 ? 1 : 0;
    cfg.seed    = seed;
    cfg.validate();

    const ModelConfig mcfg  = cfg.model_config();
    TransmissionGraph graph = build_transmission_graph(ds, cfg.top_k);
    Normalizer nm           = Normalizer::fit(ds);
    auto windows = make_windows(ds, Split::train, cfg.window, cfg.horizon, 0.0, seed);
    const WindowSample& sample = windows.front();

    ModelParams params(mcfg, seed);

    auto loss_at = [&](const ModelParams& p) {
        ForwardResult fw = forward_window(p.weights(), mcfg, graph, sample, nm);
        return loss(fw.prediction, target_tensor(sample, nm), cfg.loss).value();
    };

    // analytic gradients
    GradMap analytic;
    {
        GradientTape tape;
        ModelWeights bound = params.bind(tape);
        ForwardResult fw   = forward_window(bound, mcfg, graph, sample, nm);
        analytic = tape.backward(loss(fw.prediction, target_tensor(sample, nm), cfg.loss));
    }

    GradcheckReport report;
    const double h = 1e-5;
    for (int uid = 0; uid < params.count(); ++uid) {
        GradcheckEntry entry;
        entry.name = params.name(uid);

        auto it = analytic.find(uid);
        Tensor ga = it != analytic.end() ? it->second
                                         : Tensor::zeros(params.value(uid).shape());

        ModelParams probe = params;
        auto& data        = probe.value(uid).mutable_data();
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double keep = data[i];
            data[i]           = keep + h;
            const double fp   = loss_at(probe);
            data[i]           = keep - h;
            const double fm   = loss_at(probe);
            data[i]           = keep;

            const double fd  = (fp - fm) / (2 * h);
            const double an  = ga.data()[i];
            const double abs = std::fabs(an - fd);
            const double rel = abs / std::max({std::fabs(an), std::fabs(fd), 1e-4});
            entry.max_abs_err = std::max(entry.max_abs_err, abs);
            entry.max_rel_err = std::max(entry.max_rel_err, rel);
        }
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.params.push_back(std::move(entry));
    }
    return report;
}

}  // namespace earth
