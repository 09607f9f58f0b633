#include "earth/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace earth {

namespace {

std::string trimmed(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        const double x  = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(x))
            throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad numeric value '" + v + "' for " + key);
    }
}

long parse_int(const std::string& key, const std::string& v)
{
    const double x = parse_double(key, v);
    if (x != std::floor(x))
        throw std::invalid_argument("config: expected integer for " + key + ", got '" + v + "'");
    return (long)x;
}

}  // namespace

ModelConfig TrainConfig::model_config() const
{
    ModelConfig m;
    m.hidden             = hidden;
    m.n_heads            = n_heads;
    m.solver             = solver;
    m.substeps           = substeps;
    m.drift              = drift;
    m.query              = query;
    m.graph              = graph;
    m.neighbor_threshold = neighbor_threshold;
    m.sparsity_l1        = sparsity_l1;
    return m;
}

void TrainConfig::validate() const
{
    if (lr <= 0 || momentum < 0 || momentum >= 1 || weight_decay < 0)
        throw std::invalid_argument("config: bad optimizer settings");
    if (hidden < 1 || window < 2 || horizon < 1 || epochs < 0 || batch < 1 || repeats < 1)
        throw std::invalid_argument("config: sizes must be positive (window >= 2)");
    if (n_heads < 1 || hidden % n_heads != 0)
        throw std::invalid_argument("config: hidden must be divisible by n_heads");
    if (top_k < 0 || substeps < 1 || patience < 0)
        throw std::invalid_argument("config: bad top_k/substeps/patience");
    if (missing_rate < 0 || missing_rate >= 1)
        throw std::invalid_argument("config: missing_rate must be in [0, 1)");
    if (train_ratio <= 0 || val_ratio < 0 || train_ratio + val_ratio >= 1)
        throw std::invalid_argument("config: bad split ratios");
}

void apply_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value)
{
    if (key == "lr")
        cfg.lr = parse_double(key, value);
    else if (key == "momentum")
        cfg.momentum = parse_double(key, value);
    else if (key == "weight_decay")
        cfg.weight_decay = parse_double(key, value);
    else if (key == "hidden")
        cfg.hidden = (int)parse_int(key, value);
    else if (key == "window")
        cfg.window = (int)parse_int(key, value);
    else if (key == "horizon")
        cfg.horizon = (int)parse_int(key, value);
    else if (key == "epochs")
        cfg.epochs = (int)parse_int(key, value);
    else if (key == "batch")
        cfg.batch = (int)parse_int(key, value);
    else if (key == "repeats")
        cfg.repeats = (int)parse_int(key, value);
    else if (key == "n_heads")
        cfg.n_heads = (int)parse_int(key, value);
    else if (key == "top_k")
        cfg.top_k = (int)parse_int(key, value);
    else if (key == "substeps")
        cfg.substeps = (int)parse_int(key, value);
    else if (key == "seed")
        cfg.seed = (std::uint64_t)parse_int(key, value);
    else if (key == "patience")
        cfg.patience = (int)parse_int(key, value);
    else if (key == "train_ratio")
        cfg.train_ratio = parse_double(key, value);
    else if (key == "val_ratio")
        cfg.val_ratio = parse_double(key, value);
    else if (key == "missing_rate")
        cfg.missing_rate = parse_double(key, value);
    else if (key == "neighbor_threshold")
        cfg.neighbor_threshold = parse_double(key, value);
    else if (key == "sparsity_l1")
        cfg.sparsity_l1 = parse_double(key, value);
    else if (key == "dtw_cache")
        cfg.dtw_cache = value;
    else if (key == "solver") {
        if (value == "rk4")
            cfg.solver = OdeMethod::rk4;
        else if (value == "euler")
            cfg.solver = OdeMethod::euler;
        else
            throw std::invalid_argument("config: solver must be rk4 or euler, got '" + value + "'");
    } else if (key == "loss") {
        if (value == "mse")
            cfg.loss = LossMode::mse;
        else if (value == "mae")
            cfg.loss = LossMode::mae;
        else
            throw std::invalid_argument("config: loss must be mse or mae, got '" + value + "'");
    } else if (key == "query") {
        if (value == "z")
            cfg.query = QueryMode::z;
        else if (value == "h")
            cfg.query = QueryMode::h;
        else
            throw std::invalid_argument("config: query must be z or h, got '" + value + "'");
    } else if (key == "drift") {
        if (value == "modulated")
            cfg.drift = DriftMode::modulated;
        else if (value == "pure")
            cfg.drift = DriftMode::pure;
        else
            throw std::invalid_argument("config: drift must be modulated or pure, got '" + value +
                                        "'");
    } else if (key == "graph") {
        if (value == "fused")
            cfg.graph = GraphMode::fused;
        else if (value == "static_only")
            cfg.graph = GraphMode::static_only;
        else
            throw std::invalid_argument("config: graph must be fused or static_only, got '" +
                                        value + "'");
    } else if (key == "peak_threshold") {
        const auto colon = value.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument(
                "config: peak_threshold must be 'percentile:P' or 'absolute:V'");
        const std::string kind = value.substr(0, colon);
        const double num       = parse_double(key, value.substr(colon + 1));
        if (kind == "percentile")
            cfg.peak_threshold_kind = PeakThresholdKind::percentile;
        else if (kind == "absolute")
            cfg.peak_threshold_kind = PeakThresholdKind::absolute;
        else
            throw std::invalid_argument("config: unknown peak_threshold kind '" + kind + "'");
        cfg.peak_threshold_value = num;
    } else {
        throw std::invalid_argument("config: unknown key '" + key + "'");
    }
}

namespace {

void parse_kv_file(const std::string& path,
                   const std::function<void(const std::string&, const std::string&)>& apply)
{
    std::ifstream f(path);
    if (!f)
        throw std::runtime_error("config: cannot open " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trimmed(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 'key = value'");
        try {
            apply(trimmed(line.substr(0, eq)), trimmed(line.substr(eq + 1)));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

}  // namespace

TrainConfig parse_config_file(const std::string& path)
{
    TrainConfig cfg;
    parse_kv_file(path,
                  [&cfg](const std::string& k, const std::string& v) { apply_config_entry(cfg, k, v); });
    cfg.validate();
    return cfg;
}

SynthFileConfig parse_synth_config_file(const std::string& path)
{
    SynthFileConfig fc;
    parse_kv_file(path, [&fc](const std::string& key, const std::string& value) {
        if (key == "regions")
            fc.synth.regions = (int)parse_int(key, value);
        else if (key == "length")
            fc.synth.length = (int)parse_int(key, value);
        else if (key == "gamma")
            fc.synth.gamma = parse_double(key, value);
        else if (key == "population")
            fc.synth.population = parse_double(key, value);
        else if (key == "noise_std")
            fc.synth.noise_std = parse_double(key, value);
        else if (key == "noise_pct_of_peak")
            fc.noise_pct_of_peak = parse_double(key, value);
        else if (key == "seed")
            fc.synth.seed = (std::uint64_t)parse_int(key, value);
        else if (key == "train_ratio")
            fc.synth.train_ratio = parse_double(key, value);
        else if (key == "val_ratio")
            fc.synth.val_ratio = parse_double(key, value);
        else if (key == "coupling_topology")
            fc.coupling_topology = value;
        else if (key == "coupling_strength")
            fc.coupling_strength = parse_double(key, value);
        else if (key == "beta_schedule") {
            // "t0:beta0, t1:beta1, ..."
            fc.synth.beta_schedule.clear();
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) {
                const auto colon = item.find(':');
                if (colon == std::string::npos)
                    throw std::invalid_argument("config: beta_schedule entries are 't:beta'");
                fc.synth.beta_schedule.push_back(
                    {parse_double(key, trimmed(item.substr(0, colon))),
                     parse_double(key, trimmed(item.substr(colon + 1)))});
            }
            if (fc.synth.beta_schedule.empty())
                throw std::invalid_argument("config: empty beta_schedule");
        } else if (key == "initial_infected") {
            fc.synth.initial_infected.clear();
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ','))
                fc.synth.initial_infected.push_back(parse_double(key, trimmed(item)));
        } else
            throw std::invalid_argument("config: unknown key '" + key + "'");
    });
    return fc;
}

SynthConfig resolve_synth_config(const SynthFileConfig& fc)
{
    SynthConfig cfg = fc.synth;
    const int n     = cfg.regions;

    cfg.coupling.assign(n, std::vector<double>(n, 0.0));
    if (fc.coupling_topology == "ring") {
        for (int v = 0; v < n; ++v) {
            cfg.coupling[v][(v + 1) % n] = fc.coupling_strength;
            cfg.coupling[v][(v + n - 1) % n] = fc.coupling_strength;
        }
    } else if (fc.coupling_topology == "full") {
        for (int u = 0; u < n; ++u)
            for (int v = 0; v < n; ++v)
                if (u != v)
                    cfg.coupling[u][v] = fc.coupling_strength;
    } else if (fc.coupling_topology != "none") {
        throw std::invalid_argument("config: coupling_topology must be ring, full or none");
    }
    if (n == 1)
        cfg.coupling.clear();

    if (fc.noise_pct_of_peak > 0.0) {
        SynthConfig noiseless = cfg;
        noiseless.noise_std   = 0.0;
        auto clean            = generate_synthetic(noiseless);
        double peak           = 0.0;
        for (const auto& row : clean.series)
            for (double v : row)
                peak = std::max(peak, v);
        cfg.noise_std = fc.noise_pct_of_peak / 100.0 * peak;
    }
    return cfg;
}

std::string to_string(OdeMethod m)
{
    return m == OdeMethod::rk4 ? "rk4" : "euler";
}
std::string to_string(LossMode m)
{
    return m == LossMode::mse ? "mse" : "mae";
}
std::string to_string(QueryMode m)
{
    return m == QueryMode::z ? "z" : "h";
}
std::string to_string(DriftMode m)
{
    return m == DriftMode::modulated ? "modulated" : "pure";
}
std::string to_string(GraphMode m)
{
    return m == GraphMode::fused ? "fused" : "static_only";
}

}  // namespace earth
