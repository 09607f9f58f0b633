#include "earth/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "earth/eano.hpp"
#include "earth/spline.hpp"

namespace earth {

namespace {

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim surrounding whitespace/CR
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',')
        out.push_back("");
    return out;
}

[[noreturn]] void format_error(const std::string& path, int line_no, const std::string& what)
{
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

void assign_splits(EpidemicDataset& ds, double train_ratio, double val_ratio)
{
    if (train_ratio <= 0 || val_ratio < 0 || train_ratio + val_ratio >= 1.0)
        throw std::invalid_argument("assign_splits: ratios must satisfy 0 < train, 0 <= val, train+val < 1");
    const int len = ds.length();
    const int a   = (int)std::llround(train_ratio * len);
    const int b   = (int)std::llround((train_ratio + val_ratio) * len);
    ds.train = {0, a};
    ds.val   = {a, b};
    ds.test  = {b, len};
}

EpidemicDataset load_csv(const std::string& series_path, const std::string& adjacency_path,
                         double train_ratio, double val_ratio)
{
    EpidemicDataset ds;

    std::ifstream sf(series_path);
    if (!sf)
        throw std::runtime_error("load_csv: cannot open " + series_path);
    std::string line;
    int line_no = 0;

    if (!std::getline(sf, line) || line.empty())
        format_error(series_path, 1, "missing header row of region names");
    ++line_no;
    ds.region_names = split_csv_line(line);
    const int n     = (int)ds.region_names.size();
    for (const auto& name : ds.region_names) {
        if (name.empty())
            format_error(series_path, 1, "empty region name in header");
        // a numeric-looking header is almost certainly a data row
        char* end = nullptr;
        std::strtod(name.c_str(), &end);
        if (end && *end == '\0')
            format_error(series_path, 1, "header looks like data (missing header row?)");
    }

    ds.series.assign(n, {});
    while (std::getline(sf, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        auto fields = split_csv_line(line);
        if ((int)fields.size() != n)
            format_error(series_path, line_no,
                         "expected " + std::to_string(n) + " fields, got " +
                             std::to_string(fields.size()));
        for (int r = 0; r < n; ++r) {
            char* end = nullptr;
            const double v = std::strtod(fields[r].c_str(), &end);
            if (fields[r].empty() || !end || *end != '\0' || !std::isfinite(v))
                format_error(series_path, line_no, "bad value '" + fields[r] + "'");
            if (v < 0)
                format_error(series_path, line_no, "negative count " + fields[r]);
            ds.series[r].push_back(v);
        }
    }
    if (ds.length() == 0)
        format_error(series_path, line_no, "no data rows");

    // adjacency edge list
    std::ifstream af(adjacency_path);
    if (!af)
        throw std::runtime_error("load_csv: cannot open " + adjacency_path);
    ds.adjacency = Tensor({n, n});
    auto& adj    = ds.adjacency.mutable_data();
    line_no      = 0;
    if (!std::getline(af, line))
        format_error(adjacency_path, 1, "missing 'src,dst' header");
    ++line_no;
    {
        auto hdr = split_csv_line(line);
        if (hdr.size() != 2 || hdr[0] != "src" || hdr[1] != "dst")
            format_error(adjacency_path, 1, "expected header 'src,dst'");
    }
    auto region_index = [&](const std::string& name, int ln) {
        for (int r = 0; r < n; ++r)
            if (ds.region_names[r] == name)
                return r;
        format_error(adjacency_path, ln, "unknown region '" + name + "'");
    };
    while (std::getline(af, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 2)
            format_error(adjacency_path, line_no, "expected 'src,dst'");
        const int u = region_index(fields[0], line_no);
        const int v = region_index(fields[1], line_no);
        if (u == v)
            format_error(adjacency_path, line_no, "self-loop on '" + fields[0] + "'");
        adj[(long)u * n + v] = 1.0;  // duplicates and reverse edges collapse
        adj[(long)v * n + u] = 1.0;
    }

    assign_splits(ds, train_ratio, val_ratio);
    return ds;
}

void write_series_csv(const std::string& path, const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& series)
{
    std::ofstream f(path, std::ios::trunc);
    if (!f)
        throw std::runtime_error("write_series_csv: cannot open " + path);
    for (std::size_t r = 0; r < names.size(); ++r)
        f << (r ? "," : "") << names[r];
    f << '\n';
    f.precision(17);
    const int len = series.empty() ? 0 : (int)series.front().size();
    for (int t = 0; t < len; ++t) {
        for (std::size_t r = 0; r < series.size(); ++r)
            f << (r ? "," : "") << series[r][t];
        f << '\n';
    }
}

void write_adjacency_csv(const std::string& path, const std::vector<std::string>& names,
                         const Tensor& adjacency)
{
    std::ofstream f(path, std::ios::trunc);
    if (!f)
        throw std::runtime_error("write_adjacency_csv: cannot open " + path);
    f << "src,dst\n";
    const int n = (int)names.size();
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (adjacency.at(u, v) != 0.0)
                f << names[u] << ',' << names[v] << '\n';
}

std::vector<WindowSample> make_windows(const EpidemicDataset& ds, Split split, int window,
                                       int horizon, double missing_rate, std::uint64_t seed)
{
    const SplitRange range = split == Split::train ? ds.train
                             : split == Split::val ? ds.val
                                                   : ds.test;
    if (window < 2 || horizon < 1)
        throw std::invalid_argument("make_windows: need window >= 2 and horizon >= 1");
    if (range.length() < window + horizon)
        throw std::invalid_argument("make_windows: split of length " +
                                    std::to_string(range.length()) +
                                    " is too short for window " + std::to_string(window) +
                                    " + horizon " + std::to_string(horizon));

    const int n = ds.regions();
    std::vector<double> full_times(window);
    for (int i = 0; i < window; ++i)
        full_times[i] = i;

    std::vector<WindowSample> out;
    for (int s = range.begin; s + window + horizon <= range.end; ++s) {
        WindowSample w;
        w.start = s;
        std::vector<std::vector<double>> obs(n, std::vector<double>(window));
        for (int r = 0; r < n; ++r)
            for (int i = 0; i < window; ++i)
                obs[r][i] = ds.series[r][s + i];

        if (missing_rate > 0.0) {
            // splitmix-style per-window seed derivation
            std::uint64_t ws = seed + 0x9e3779b97f4a7c15ull * (std::uint64_t)(s + 1);
            auto thin    = drop_observations(full_times, obs, missing_rate, ws);
            w.knot_times = std::move(thin.times);
            w.x          = std::move(thin.observations);
        } else {
            w.knot_times = full_times;
            w.x          = std::move(obs);
        }

        w.target.resize(n);
        for (int r = 0; r < n; ++r)
            w.target[r] = ds.series[r][s + window + horizon - 1];
        out.push_back(std::move(w));
    }
    return out;
}

Normalizer::Normalizer(std::vector<double> mean, std::vector<double> stddev)
    : mean_(std::move(mean)), std_(std::move(stddev))
{
}

Normalizer Normalizer::fit(const EpidemicDataset& ds)
{
    const int n = ds.regions();
    std::vector<double> mean(n, 0.0), sd(n, 0.0);
    const int len = ds.train.length();
    if (len < 2)
        throw std::invalid_argument("normalizer: training split too short");
    for (int r = 0; r < n; ++r) {
        double m = 0.0;
        for (int t = ds.train.begin; t < ds.train.end; ++t)
            m += ds.series[r][t];
        m /= len;
        double var = 0.0;
        for (int t = ds.train.begin; t < ds.train.end; ++t)
            var += (ds.series[r][t] - m) * (ds.series[r][t] - m);
        mean[r] = m;
        sd[r]   = std::max(std::sqrt(var / len), 1e-8);
    }
    return Normalizer(std::move(mean), std::move(sd));
}

double Normalizer::forward(int region, double v) const
{
    return (v - mean_.at(region)) / std_.at(region);
}

double Normalizer::inverse(int region, double v) const
{
    return v * std_.at(region) + mean_.at(region);
}

double rmse(const std::vector<double>& pred, const std::vector<double>& truth)
{
    if (pred.empty() || pred.size() != truth.size())
        throw std::invalid_argument("rmse: need equal nonempty vectors");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        acc += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    return std::sqrt(acc / (double)pred.size());
}

std::optional<double> peak_time_error(const std::vector<double>& pred,
                                      const std::vector<double>& truth,
                                      const std::vector<double>& threshold)
{
    if (pred.size() != truth.size() || pred.size() != threshold.size())
        throw std::invalid_argument("peak_time_error: length mismatch");
    double acc = 0.0;
    long count = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (truth[i] > threshold[i]) {
            acc += std::fabs(pred[i] - truth[i]);
            ++count;
        }
    }
    if (count == 0)
        return std::nullopt;
    return acc / (double)count;
}

std::optional<double> peak_time_error(const std::vector<double>& pred,
                                      const std::vector<double>& truth, double threshold)
{
    return peak_time_error(pred, truth, std::vector<double>(pred.size(), threshold));
}

double percentile(std::vector<double> values, double p)
{
    if (values.empty())
        throw std::invalid_argument("percentile: empty input");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * (double)(values.size() - 1);
    const std::size_t lo = (std::size_t)pos;
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac    = pos - (double)lo;
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

EpidemicDataset generate_synthetic(const SynthConfig& cfg)
{
    const int n = cfg.regions;
    if (n < 1 || cfg.length < 2)
        throw std::invalid_argument("generate_synthetic: need regions >= 1 and length >= 2");
    if (!cfg.coupling.empty() &&
        ((int)cfg.coupling.size() != n || (int)cfg.coupling.front().size() != n))
        throw std::invalid_argument("generate_synthetic: coupling must be regions x regions");
    if (cfg.beta_schedule.empty())
        throw std::invalid_argument("generate_synthetic: empty beta schedule");

    auto beta_at = [&cfg](double t) {
        double b = cfg.beta_schedule.front().beta;
        for (const auto& ph : cfg.beta_schedule)
            if (t >= ph.t_start)
                b = ph.beta;
        return b;
    };

    std::vector<double> s(n), i(n), r(n, 0.0);
    for (int v = 0; v < n; ++v) {
        const double i0 = cfg.initial_infected.empty()
                              ? cfg.population * 1e-4 * (1.0 + v)
                              : cfg.initial_infected[(std::size_t)v];
        i[v] = i0;
        s[v] = cfg.population - i0;
    }

    // RK4 at h = 0.1 on the coupled system; observations are the per-step
    // drop in susceptibles (cumulative new infections).
    const double h      = 0.1;
    const int sub_steps = 10;

    auto deriv = [&](double t, const std::vector<double>& sv, const std::vector<double>& iv,
                     std::vector<double>& dsv, std::vector<double>& div, std::vector<double>& drv) {
        const double beta = beta_at(t);
        for (int v = 0; v < n; ++v) {
            double pressure = iv[v];
            if (!cfg.coupling.empty())
                for (int u = 0; u < n; ++u)
                    pressure += cfg.coupling[v][u] * iv[u];
            const double infect = beta * sv[v] * pressure / cfg.population;
            dsv[v] = -infect;
            div[v] = infect - cfg.gamma * iv[v];
            drv[v] = cfg.gamma * iv[v];
        }
    };

    std::vector<std::vector<double>> series(n, std::vector<double>(cfg.length, 0.0));
    std::vector<double> ds1(n), di1(n), dr1(n), ds2(n), di2(n), dr2(n), ds3(n), di3(n), dr3(n),
        ds4(n), di4(n), dr4(n), st(n), it_(n), rt(n);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    for (int step = 0; step < cfg.length; ++step) {
        const std::vector<double> s_before = s;
        for (int sub = 0; sub < sub_steps; ++sub) {
            const double t = step + sub * h;
            deriv(t, s, i, ds1, di1, dr1);
            for (int v = 0; v < n; ++v) {
                st[v]  = s[v] + 0.5 * h * ds1[v];
                it_[v] = i[v] + 0.5 * h * di1[v];
            }
            deriv(t + 0.5 * h, st, it_, ds2, di2, dr2);
            for (int v = 0; v < n; ++v) {
                st[v]  = s[v] + 0.5 * h * ds2[v];
                it_[v] = i[v] + 0.5 * h * di2[v];
            }
            deriv(t + 0.5 * h, st, it_, ds3, di3, dr3);
            for (int v = 0; v < n; ++v) {
                st[v]  = s[v] + h * ds3[v];
                it_[v] = i[v] + h * di3[v];
            }
            deriv(t + h, st, it_, ds4, di4, dr4);
            for (int v = 0; v < n; ++v) {
                s[v] += h / 6 * (ds1[v] + 2 * ds2[v] + 2 * ds3[v] + ds4[v]);
                i[v] += h / 6 * (di1[v] + 2 * di2[v] + 2 * di3[v] + di4[v]);
                r[v] += h / 6 * (dr1[v] + 2 * dr2[v] + 2 * dr3[v] + dr4[v]);
                if (!std::isfinite(s[v]) || !std::isfinite(i[v]))
                    throw std::runtime_error("generate_synthetic: trajectory diverged at step " +
                                             std::to_string(step));
            }
        }
        for (int v = 0; v < n; ++v) {
            double obs = s_before[v] - s[v];  // new infections this step
            if (cfg.noise_std > 0.0)
                obs += cfg.noise_std * noise(rng);
            series[v][step] = std::max(obs, 0.0);
        }
    }

    EpidemicDataset out;
    out.series = std::move(series);
    for (int v = 0; v < n; ++v)
        out.region_names.push_back("region_" + std::to_string(v));
    out.adjacency = Tensor({n, n});
    if (!cfg.coupling.empty()) {
        auto& adj = out.adjacency.mutable_data();
        for (int u = 0; u < n; ++u)
            for (int v = 0; v < n; ++v)
                if (u != v && (cfg.coupling[u][v] > 0.0 || cfg.coupling[v][u] > 0.0)) {
                    adj[(long)u * n + v] = 1.0;
                    adj[(long)v * n + u] = 1.0;
                }
    }
    assign_splits(out, cfg.train_ratio, cfg.val_ratio);
    return out;
}

}  // namespace earth
