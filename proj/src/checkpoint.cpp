#include "earth/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace earth {

namespace {

constexpr char kMagic[8]            = {'E', 'R', 'T', 'H', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion    = 1;

class Writer {
public:
    explicit Writer(const std::string& path) : f_(path, std::ios::binary | std::ios::trunc)
    {
        if (!f_)
            throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    }
    void bytes(const void* p, std::size_t n) { f_.write(static_cast<const char*>(p), (long)n); }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void i64(std::int64_t v) { bytes(&v, 8); }
    void f64(double v) { bytes(&v, 8); }
    void str(const std::string& s)
    {
        u32((std::uint32_t)s.size());
        bytes(s.data(), s.size());
    }
    void tensor(const Tensor& t)
    {
        u32((std::uint32_t)t.shape().size());
        for (int d : t.shape())
            i64(d);
        bytes(t.data().data(), t.size() * sizeof(double));
    }
    bool good() const { return (bool)f_; }

private:
    std::ofstream f_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : f_(path, std::ios::binary)
    {
        if (!f_)
            throw std::runtime_error("checkpoint: cannot open " + path);
    }
    void bytes(void* p, std::size_t n)
    {
        f_.read(static_cast<char*>(p), (long)n);
        if (!f_)
            throw std::runtime_error("checkpoint: truncated file");
    }
    std::uint8_t u8()
    {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32()
    {
        std::uint32_t v;
        bytes(&v, 4);
        return v;
    }
    std::int64_t i64()
    {
        std::int64_t v;
        bytes(&v, 8);
        return v;
    }
    double f64()
    {
        double v;
        bytes(&v, 8);
        return v;
    }
    std::string str()
    {
        std::string s(u32(), '\0');
        if (!s.empty())
            bytes(s.data(), s.size());
        return s;
    }
    Tensor tensor()
    {
        Shape shape((std::size_t)u32());
        long n = 1;
        for (auto& d : shape) {
            d = (int)i64();
            n *= d;
        }
        std::vector<double> data((std::size_t)n);
        bytes(data.data(), (std::size_t)n * sizeof(double));
        return Tensor(std::move(shape), std::move(data));
    }

private:
    std::ifstream f_;
};

void write_config(Writer& w, const TrainConfig& c)
{
    w.f64(c.lr);
    w.f64(c.momentum);
    w.f64(c.weight_decay);
    w.i64(c.hidden);
    w.i64(c.window);
    w.i64(c.horizon);
    w.i64(c.epochs);
    w.i64(c.batch);
    w.i64(c.repeats);
    w.i64(c.n_heads);
    w.i64(c.top_k);
    w.u8((std::uint8_t)c.solver);
    w.i64(c.substeps);
    w.i64((std::int64_t)c.seed);
    w.u8((std::uint8_t)c.loss);
    w.u8((std::uint8_t)c.query);
    w.u8((std::uint8_t)c.drift);
    w.u8((std::uint8_t)c.graph);
    w.i64(c.patience);
    w.f64(c.train_ratio);
    w.f64(c.val_ratio);
    w.f64(c.missing_rate);
    w.u8((std::uint8_t)c.peak_threshold_kind);
    w.f64(c.peak_threshold_value);
    w.f64(c.neighbor_threshold);
    w.f64(c.sparsity_l1);
    w.str(c.dtw_cache);
}

TrainConfig read_config(Reader& r)
{
    TrainConfig c;
    c.lr           = r.f64();
    c.momentum     = r.f64();
    c.weight_decay = r.f64();
    c.hidden       = (int)r.i64();
    c.window       = (int)r.i64();
    c.horizon      = (int)r.i64();
    c.epochs       = (int)r.i64();
    c.batch        = (int)r.i64();
    c.repeats      = (int)r.i64();
    c.n_heads      = (int)r.i64();
    c.top_k        = (int)r.i64();
    c.solver       = (OdeMethod)r.u8();
    c.substeps     = (int)r.i64();
    c.seed         = (std::uint64_t)r.i64();
    c.loss         = (LossMode)r.u8();
    c.query        = (QueryMode)r.u8();
    c.drift        = (DriftMode)r.u8();
    c.graph        = (GraphMode)r.u8();
    c.patience     = (int)r.i64();
    c.train_ratio  = r.f64();
    c.val_ratio    = r.f64();
    c.missing_rate = r.f64();
    c.peak_threshold_kind  = (PeakThresholdKind)r.u8();
    c.peak_threshold_value = r.f64();
    c.neighbor_threshold   = r.f64();
    c.sparsity_l1          = r.f64();
    c.dtw_cache            = r.str();
    return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt)
{
    Writer w(path);
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kVersion);
    write_config(w, ckpt.config);

    w.u32((std::uint32_t)ckpt.region_names.size());
    for (const auto& name : ckpt.region_names)
        w.str(name);

    const auto& mean = ckpt.normalizer.means();
    const auto& sd   = ckpt.normalizer.stddevs();
    w.u32((std::uint32_t)mean.size());
    w.bytes(mean.data(), mean.size() * sizeof(double));
    w.bytes(sd.data(), sd.size() * sizeof(double));

    w.tensor(ckpt.adjacency);
    w.tensor(ckpt.a_tilde_static);
    w.i64(ckpt.epoch);
    w.f64(ckpt.best_val_rmse);

    ModelWeights weights = ckpt.params.weights();  // visit needs mutable access
    std::uint32_t count  = 0;
    visit_weights(weights, [&count](const std::string&, Tensor&) { ++count; });
    w.u32(count);
    visit_weights(weights, [&w](const std::string& name, Tensor& t) {
        w.str(name);
        w.tensor(t);
    });
    if (!w.good())
        throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path)
{
    Reader r(path);
    char magic[8];
    r.bytes(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const auto version = r.u32();
    if (version != kVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

    Checkpoint ckpt;
    ckpt.config = read_config(r);

    ckpt.region_names.resize(r.u32());
    for (auto& name : ckpt.region_names)
        name = r.str();

    const auto n = r.u32();
    std::vector<double> mean(n), sd(n);
    r.bytes(mean.data(), n * sizeof(double));
    r.bytes(sd.data(), n * sizeof(double));
    ckpt.normalizer = Normalizer(std::move(mean), std::move(sd));

    ckpt.adjacency      = r.tensor();
    ckpt.a_tilde_static = r.tensor();
    ckpt.epoch          = r.i64();
    ckpt.best_val_rmse  = r.f64();

    ckpt.params = ModelParams(ckpt.config.model_config(), ckpt.config.seed);
    const auto count = r.u32();
    if ((int)count != ckpt.params.count())
        throw std::runtime_error("checkpoint: parameter count mismatch");
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = r.str();
        if (name != ckpt.params.name((int)i))
            throw std::runtime_error("checkpoint: unexpected parameter '" + name + "'");
        Tensor t = r.tensor();
        if (t.shape() != ckpt.params.value((int)i).shape())
            throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
        ckpt.params.value((int)i) = t;
    }
    return ckpt;
}

}  // namespace earth
