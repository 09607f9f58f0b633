#include "earth/tensor.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "earth/kernels.hpp"

namespace earth {

namespace {

long shape_size(const Shape& s)
{
    long n = 1;
    for (int d : s) {
        if (d <= 0)
            throw std::invalid_argument("tensor: nonpositive dimension in shape " + shape_str(s));
        n *= d;
    }
    return n;
}

// Rank-1 tensors participate in 2-D ops as a single row.
int rows_of(const Shape& s)
{
    if (s.size() == 1)
        return 1;
    if (s.size() == 2)
        return s[0];
    throw std::invalid_argument("tensor: expected rank <= 2, got shape " + shape_str(s));
}

int cols_of(const Shape& s)
{
    if (s.size() == 1)
        return s[0];
    if (s.size() == 2)
        return s[1];
    throw std::invalid_argument("tensor: expected rank <= 2, got shape " + shape_str(s));
}

void check_same_shape(const char* op, const Shape& a, const Shape& b)
{
    if (a != b)
        throw std::invalid_argument(std::string(op) + ": shape mismatch (" + shape_str(a) +
                                    " vs " + shape_str(b) + ")");
}

double stable_sigmoid(double x)
{
    if (x >= 0.0)
        return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

std::string shape_str(const Shape& s)
{
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i)
            os << 'x';
        os << s[i];
    }
    os << ']';
    return os.str();
}

// --- Tensor ------------------------------------------------------------

Tensor::Tensor(Shape shape) : shape_(std::move(shape))
{
    data_ = std::make_shared<std::vector<double>>(shape_size(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape))
{
    if ((long)data.size() != shape_size(shape_))
        throw std::invalid_argument("tensor: data length " + std::to_string(data.size()) +
                                    " does not match shape " + shape_str(shape_));
    data_ = std::make_shared<std::vector<double>>(std::move(data));
}

Tensor Tensor::scalar(double v)
{
    return Tensor({1}, {v});
}

Tensor Tensor::zeros(Shape shape)
{
    return Tensor(std::move(shape));
}

Tensor Tensor::full(Shape shape, double v)
{
    Tensor t(std::move(shape));
    for (auto& x : *t.data_)
        x = v;
    return t;
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows)
{
    const int m = (int)rows.size();
    const int n = m ? (int)rows.begin()->size() : 0;
    std::vector<double> d;
    d.reserve((std::size_t)m * n);
    for (const auto& r : rows) {
        if ((int)r.size() != n)
            throw std::invalid_argument("tensor: ragged matrix literal");
        d.insert(d.end(), r.begin(), r.end());
    }
    return Tensor({m, n}, std::move(d));
}

Tensor Tensor::vector(std::initializer_list<double> v)
{
    return Tensor({(int)v.size()}, std::vector<double>(v));
}

int Tensor::rows() const
{
    return rows_of(shape_);
}

int Tensor::cols() const
{
    return cols_of(shape_);
}

long Tensor::size() const
{
    return data_ ? (long)data_->size() : 0;
}

double Tensor::at(int i) const
{
    return (*data_).at((std::size_t)i);
}

double Tensor::at(int i, int j) const
{
    return (*data_).at((std::size_t)i * cols() + j);
}

double Tensor::value() const
{
    if (size() != 1)
        throw std::logic_error("tensor: value() requires a scalar, shape is " + shape_str(shape_));
    return (*data_)[0];
}

std::span<const double> Tensor::data() const
{
    static const std::vector<double> empty;
    return data_ ? std::span<const double>(*data_) : std::span<const double>(empty);
}

std::vector<double>& Tensor::mutable_data()
{
    return *data_;
}

bool Tensor::all_finite() const
{
    if (!data_)
        return true;
    for (double v : *data_)
        if (!std::isfinite(v))
            return false;
    return true;
}

// --- GradientTape ------------------------------------------------------

int GradientTape::record(Node n)
{
    // Parents must precede children: append order is topological order.
    const int id = (int)nodes_.size();
    if (n.a >= id || n.b >= id)
        throw std::logic_error("tape: parent recorded after child");
    if (nodes_.capacity() == nodes_.size())
        nodes_.reserve(std::max<std::size_t>(4096, nodes_.size() * 2));
    nodes_.push_back(std::move(n));
    return id;
}

Tensor GradientTape::wrap(int id)
{
    Tensor t;
    t.shape_   = nodes_[id].shape;
    t.data_    = nodes_[id].value;
    t.tape_    = this;
    t.tape_id_ = id;
    return t;
}

Tensor GradientTape::leaf(const Tensor& init, int uid)
{
    Node n;
    n.op    = Op::Leaf;
    n.shape = init.shape();
    n.value = std::make_shared<std::vector<double>>(init.data().begin(), init.data().end());
    n.uid   = uid;
    return wrap(record(std::move(n)));
}

namespace {

GradientTape* common_tape(const Tensor& a, const Tensor& b)
{
    if (a.on_tape() && b.on_tape() && a.tape() != b.tape())
        throw std::logic_error("tensor op: operands recorded on different tapes");
    return a.on_tape() ? a.tape() : (b.on_tape() ? b.tape() : nullptr);
}

}  // namespace

GradMap GradientTape::backward(const Tensor& loss)
{
    GradMap out;
    if (!loss.on_tape() || empty())
        return out;  // constant loss: nothing depends on parameters
    if (loss.tape() != this)
        throw std::logic_error("backward: loss recorded on a different tape");
    if (loss.size() != 1)
        throw std::logic_error("backward: loss must be scalar, shape is " +
                               shape_str(loss.shape()));

    const int n = (int)nodes_.size();
    std::vector<std::vector<double>> grad(n);
    auto g = [&](int id, const Shape& s) -> std::vector<double>& {
        if (grad[id].empty())
            grad[id].assign(shape_size(s), 0.0);
        return grad[id];
    };

    grad[loss.tape_id()].assign(1, 1.0);

    for (int id = n - 1; id >= 0; --id) {
        const Node& nd = nodes_[id];
        if (grad[id].empty())
            continue;  // node does not influence the loss
        const std::vector<double>& u = grad[id];
        const std::vector<double>& y = *nd.value;

        switch (nd.op) {
        case Op::Leaf:
            if (nd.uid >= 0)
                out.emplace(nd.uid, Tensor(nd.shape, grad[id]));
            break;
        case Op::Matmul: {
            const int m = rows_of(nd.ashape), k = cols_of(nd.ashape), p = cols_of(nd.bshape);
            if (nd.a >= 0) {
                auto& ga = g(nd.a, nd.ashape);
                std::vector<double> tmp((std::size_t)m * k);
                kernels::matmul_nt(tmp.data(), u.data(), nd.bval->data(), m, p, k);
                for (long i = 0; i < (long)tmp.size(); ++i)
                    ga[i] += tmp[i];
            }
            if (nd.b >= 0) {
                auto& gb = g(nd.b, nd.bshape);
                std::vector<double> tmp((std::size_t)k * p);
                kernels::matmul_tn(tmp.data(), nd.aval->data(), u.data(), k, m, p);
                for (long i = 0; i < (long)tmp.size(); ++i)
                    gb[i] += tmp[i];
            }
            break;
        }
        case Op::Transpose: {
            if (nd.a < 0)
                break;
            auto& ga    = g(nd.a, nd.ashape);
            const int m = rows_of(nd.ashape), c = cols_of(nd.ashape);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < c; ++j)
                    ga[(long)i * c + j] += u[(long)j * m + i];
            break;
        }
        case Op::Add:
        case Op::Sub: {
            const double sgn = nd.op == Op::Sub ? -1.0 : 1.0;
            if (nd.a >= 0) {
                auto& ga = g(nd.a, nd.ashape);
                if (ga.size() == 1 && u.size() > 1) {
                    double acc = 0.0;
                    for (double v : u)
                        acc += v;
                    ga[0] += acc;
                } else {
                    for (long i = 0; i < (long)u.size(); ++i)
                        ga[i] += u[i];
                }
            }
            if (nd.b >= 0) {
                auto& gb = g(nd.b, nd.bshape);
                if (gb.size() == 1 && u.size() > 1) {
                    double acc = 0.0;
                    for (double v : u)
                        acc += v;
                    gb[0] += sgn * acc;
                } else {
                    for (long i = 0; i < (long)u.size(); ++i)
                        gb[i] += sgn * u[i];
                }
            }
            break;
        }
        case Op::Mul: {
            const auto& av = *nd.aval;
            const auto& bv = *nd.bval;
            if (nd.a >= 0) {
                auto& ga = g(nd.a, nd.ashape);
                if (av.size() == 1 && u.size() > 1) {
                    double acc = 0.0;
                    for (long i = 0; i < (long)u.size(); ++i)
                        acc += u[i] * bv[i];
                    ga[0] += acc;
                } else {
                    for (long i = 0; i < (long)u.size(); ++i)
                        ga[i] += u[i] * (bv.size() == 1 ? bv[0] : bv[i]);
                }
            }
            if (nd.b >= 0) {
                auto& gb = g(nd.b, nd.bshape);
                if (bv.size() == 1 && u.size() > 1) {
                    double acc = 0.0;
                    for (long i = 0; i < (long)u.size(); ++i)
                        acc += u[i] * av[i];
                    gb[0] += acc;
                } else {
                    for (long i = 0; i < (long)u.size(); ++i)
                        gb[i] += u[i] * (av.size() == 1 ? av[0] : av[i]);
                }
            }
            break;
        }
        case Op::Axpy:
            if (nd.a >= 0) {
                auto& ga = g(nd.a, nd.ashape);
                for (long i = 0; i < (long)u.size(); ++i)
                    ga[i] += u[i];
            }
            if (nd.b >= 0) {
                auto& gb = g(nd.b, nd.bshape);
                for (long i = 0; i < (long)u.size(); ++i)
                    gb[i] += nd.coef * u[i];
            }
            break;
        case Op::Neg:
            if (nd.a >= 0) {
                auto& ga = g(nd.a, nd.ashape);
                for (long i = 0; i < (long)u.size(); ++i)
                    ga[i] -= u[i];
            }
            break;
        case Op::Tanh:
            if (nd.a >= 0) {
                auto& ga = g(nd.a, nd.ashape);
                for (long i = 0; i < (long)u.size(); ++i)
                    ga[i] += u[i] * (1.0 - y[i] * y[i]);
            }
            break;
        case Op::Sigmoid:
            if (nd.a >= 0) {
                auto& ga = g(nd.a, nd.ashape);
                for (long i = 0; i < (long)u.size(); ++i)
                    ga[i] += u[i] * y[i] * (1.0 - y[i]);
            }
            break;
        case Op::Relu:
            if (nd.a >= 0) {
                auto& ga = g(nd.a, nd.ashape);
                for (long i = 0; i < (long)u.size(); ++i)
                    ga[i] += y[i] > 0.0 ? u[i] : 0.0;
            }
            break;
        case Op::Abs:
            if (nd.a >= 0) {
                auto& ga       = g(nd.a, nd.ashape);
                const auto& av = *nd.aval;
                for (long i = 0; i < (long)u.size(); ++i)
                    ga[i] += av[i] > 0.0 ? u[i] : (av[i] < 0.0 ? -u[i] : 0.0);
            }
            break;
        case Op::ConcatCols: {
            const int m = rows_of(nd.shape);
            const int ca = cols_of(nd.ashape), cb = cols_of(nd.bshape);
            if (nd.a >= 0) {
                auto& ga = g(nd.a, nd.ashape);
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < ca; ++j)
                        ga[(long)i * ca + j] += u[(long)i * (ca + cb) + j];
            }
            if (nd.b >= 0) {
                auto& gb = g(nd.b, nd.bshape);
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < cb; ++j)
                        gb[(long)i * cb + j] += u[(long)i * (ca + cb) + ca + j];
            }
            break;
        }
        case Op::SliceCols: {
            if (nd.a < 0)
                break;
            auto& ga    = g(nd.a, nd.ashape);
            const int m = rows_of(nd.ashape), c = cols_of(nd.ashape), w = cols_of(nd.shape);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < w; ++j)
                    ga[(long)i * c + nd.attr0 + j] += u[(long)i * w + j];
            break;
        }
        case Op::SoftmaxRows: {
            if (nd.a < 0)
                break;
            auto& ga    = g(nd.a, nd.ashape);
            const int m = rows_of(nd.shape), c = cols_of(nd.shape);
            for (int i = 0; i < m; ++i) {
                double dot = 0.0;
                for (int j = 0; j < c; ++j)
                    dot += u[(long)i * c + j] * y[(long)i * c + j];
                for (int j = 0; j < c; ++j)
                    ga[(long)i * c + j] += y[(long)i * c + j] * (u[(long)i * c + j] - dot);
            }
            break;
        }
        case Op::Sum:
            if (nd.a >= 0) {
                auto& ga = g(nd.a, nd.ashape);
                for (auto& v : ga)
                    v += u[0];
            }
            break;
        case Op::Mean:
            if (nd.a >= 0) {
                auto& ga       = g(nd.a, nd.ashape);
                const double w = u[0] / (double)ga.size();
                for (auto& v : ga)
                    v += w;
            }
            break;
        case Op::Scale:
            if (nd.a >= 0) {
                auto& ga = g(nd.a, nd.ashape);
                for (long i = 0; i < (long)u.size(); ++i)
                    ga[i] += nd.coef * u[i];
            }
            break;
        case Op::RowSums: {
            if (nd.a < 0)
                break;
            auto& ga    = g(nd.a, nd.ashape);
            const int m = rows_of(nd.ashape), c = cols_of(nd.ashape);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < c; ++j)
                    ga[(long)i * c + j] += u[i];
            break;
        }
        case Op::ColSums: {
            if (nd.a < 0)
                break;
            auto& ga    = g(nd.a, nd.ashape);
            const int m = rows_of(nd.ashape), c = cols_of(nd.ashape);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < c; ++j)
                    ga[(long)i * c + j] += u[j];
            break;
        }
        case Op::BroadcastRows: {
            if (nd.a < 0)
                break;
            auto& ga    = g(nd.a, nd.ashape);
            const int m = rows_of(nd.shape), c = cols_of(nd.shape);
            for (int j = 0; j < c; ++j) {
                double acc = 0.0;
                for (int i = 0; i < m; ++i)
                    acc += u[(long)i * c + j];
                ga[j] += acc;
            }
            break;
        }
        case Op::ScaleRows: {
            const int m = rows_of(nd.ashape), c = cols_of(nd.ashape);
            const auto& av = *nd.aval;
            const auto& cv = *nd.bval;
            if (nd.a >= 0) {
                auto& ga = g(nd.a, nd.ashape);
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < c; ++j)
                        ga[(long)i * c + j] += u[(long)i * c + j] * cv[i];
            }
            if (nd.b >= 0) {
                auto& gb = g(nd.b, nd.bshape);
                for (int i = 0; i < m; ++i) {
                    double acc = 0.0;
                    for (int j = 0; j < c; ++j)
                        acc += u[(long)i * c + j] * av[(long)i * c + j];
                    gb[i] += acc;
                }
            }
            break;
        }
        case Op::Recip:
            if (nd.a >= 0) {
                auto& ga = g(nd.a, nd.ashape);
                for (long i = 0; i < (long)u.size(); ++i)
                    ga[i] -= u[i] * y[i] * y[i];
            }
            break;
        }
        if (nd.op != Op::Leaf)
            grad[id].clear();  // free as we go; tapes can be large
    }
    return out;
}

// --- op recording ----------------------------------------------------------

// Implementation-side hook with access to GradientTape internals. Ops compute
// their value eagerly and call finish() to append a node when a tape is live.
struct TapeOps {
    static std::shared_ptr<std::vector<double>> snapshot(const Tensor& t)
    {
        if (t.on_tape())
            return t.data_;  // node buffers are immutable once recorded
        return std::make_shared<std::vector<double>>(t.data().begin(), t.data().end());
    }

    static Tensor finish(GradientTape::Op op, const Tensor& a, const Tensor* b, Shape out_shape,
                         std::vector<double> value, int attr0 = 0, double coef = 0.0)
    {
        GradientTape* tape = b ? common_tape(a, *b) : (a.on_tape() ? a.tape() : nullptr);
        if (!tape)
            return Tensor(std::move(out_shape), std::move(value));

        GradientTape::Node n;
        n.op     = op;
        n.a      = a.on_tape() ? a.tape_id() : -1;
        n.ashape = a.shape();
        n.aval   = snapshot(a);
        if (b) {
            n.b      = b->on_tape() ? b->tape_id() : -1;
            n.bshape = b->shape();
            n.bval   = snapshot(*b);
        }
        n.shape = std::move(out_shape);
        n.value = std::make_shared<std::vector<double>>(std::move(value));
        n.attr0 = attr0;
        n.coef  = coef;
        return tape->wrap(tape->record(std::move(n)));
    }
};

namespace {

using Op = GradientTape::Op;

std::vector<double> ew_binary(const char* name, const Tensor& a, const Tensor& b, auto&& f)
{
    const auto av = a.data();
    const auto bv = b.data();
    if (a.size() == b.size()) {
        if (a.shape() != b.shape() && !(a.rank() == 1 || b.rank() == 1))
            check_same_shape(name, a.shape(), b.shape());
        std::vector<double> out(av.size());
        for (long i = 0; i < (long)out.size(); ++i)
            out[i] = f(av[i], bv[i]);
        return out;
    }
    if (a.size() == 1) {
        std::vector<double> out(bv.size());
        for (long i = 0; i < (long)out.size(); ++i)
            out[i] = f(av[0], bv[i]);
        return out;
    }
    if (b.size() == 1) {
        std::vector<double> out(av.size());
        for (long i = 0; i < (long)out.size(); ++i)
            out[i] = f(av[i], bv[0]);
        return out;
    }
    throw std::invalid_argument(std::string(name) + ": incompatible shapes (" +
                                shape_str(a.shape()) + " vs " + shape_str(b.shape()) +
                                "); only scalar broadcast is supported");
}

Shape ew_shape(const Tensor& a, const Tensor& b)
{
    return a.size() == 1 && b.size() > 1 ? b.shape() : a.shape();
}

std::vector<double> ew_unary(const Tensor& a, auto&& f)
{
    const auto av = a.data();
    std::vector<double> out(av.size());
    for (long i = 0; i < (long)out.size(); ++i)
        out[i] = f(av[i]);
    return out;
}

}  // namespace

// --- operations --------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b)
{
    const int m = rows_of(a.shape()), k = cols_of(a.shape());
    const int k2 = rows_of(b.shape()), p = cols_of(b.shape());
    if (k != k2)
        throw std::invalid_argument("matmul: inner dimensions differ (" + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()) + ")");
    std::vector<double> out((std::size_t)m * p);
    kernels::matmul(out.data(), a.data().data(), b.data().data(), m, k, p);
    return TapeOps::finish(Op::Matmul, a, &b, {m, p}, std::move(out));
}

Tensor transpose(const Tensor& a)
{
    const int m = rows_of(a.shape()), c = cols_of(a.shape());
    std::vector<double> out((std::size_t)m * c);
    const auto av = a.data();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < c; ++j)
            out[(long)j * m + i] = av[(long)i * c + j];
    return TapeOps::finish(Op::Transpose, a, nullptr, {c, m}, std::move(out));
}

Tensor add(const Tensor& a, const Tensor& b)
{
    auto out = ew_binary("add", a, b, [](double x, double y) { return x + y; });
    return TapeOps::finish(Op::Add, a, &b, ew_shape(a, b), std::move(out));
}

Tensor sub(const Tensor& a, const Tensor& b)
{
    auto out = ew_binary("sub", a, b, [](double x, double y) { return x - y; });
    return TapeOps::finish(Op::Sub, a, &b, ew_shape(a, b), std::move(out));
}

Tensor mul(const Tensor& a, const Tensor& b)
{
    auto out = ew_binary("mul", a, b, [](double x, double y) { return x * y; });
    return TapeOps::finish(Op::Mul, a, &b, ew_shape(a, b), std::move(out));
}

Tensor axpy(const Tensor& a, const Tensor& b, double k)
{
    check_same_shape("axpy", a.shape(), b.shape());
    const auto av = a.data();
    const auto bv = b.data();
    std::vector<double> out(av.size());
    for (long i = 0; i < (long)out.size(); ++i)
        out[i] = av[i] + k * bv[i];
    return TapeOps::finish(Op::Axpy, a, &b, a.shape(), std::move(out), 0, k);
}

Tensor neg(const Tensor& a)
{
    return TapeOps::finish(Op::Neg, a, nullptr, a.shape(),
                           ew_unary(a, [](double x) { return -x; }));
}

Tensor tanh(const Tensor& a)
{
    return TapeOps::finish(Op::Tanh, a, nullptr, a.shape(),
                           ew_unary(a, [](double x) { return std::tanh(x); }));
}

Tensor sigmoid(const Tensor& a)
{
    return TapeOps::finish(Op::Sigmoid, a, nullptr, a.shape(),
                           ew_unary(a, [](double x) { return stable_sigmoid(x); }));
}

Tensor relu(const Tensor& a)
{
    return TapeOps::finish(Op::Relu, a, nullptr, a.shape(),
                           ew_unary(a, [](double x) { return x > 0.0 ? x : 0.0; }));
}

Tensor abs(const Tensor& a)
{
    return TapeOps::finish(Op::Abs, a, nullptr, a.shape(),
                           ew_unary(a, [](double x) { return std::fabs(x); }));
}

Tensor concat_last_axis(const Tensor& a, const Tensor& b)
{
    const int m = rows_of(a.shape());
    if (rows_of(b.shape()) != m)
        throw std::invalid_argument("concat_last_axis: row counts differ (" +
                                    shape_str(a.shape()) + " vs " + shape_str(b.shape()) + ")");
    const int ca = cols_of(a.shape()), cb = cols_of(b.shape());
    std::vector<double> out((std::size_t)m * (ca + cb));
    const auto av = a.data();
    const auto bv = b.data();
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < ca; ++j)
            out[(long)i * (ca + cb) + j] = av[(long)i * ca + j];
        for (int j = 0; j < cb; ++j)
            out[(long)i * (ca + cb) + ca + j] = bv[(long)i * cb + j];
    }
    Shape os = (a.rank() == 1 && b.rank() == 1) ? Shape{ca + cb} : Shape{m, ca + cb};
    return TapeOps::finish(Op::ConcatCols, a, &b, std::move(os), std::move(out));
}

Tensor slice_cols(const Tensor& a, int start, int width)
{
    const int m = rows_of(a.shape()), c = cols_of(a.shape());
    if (start < 0 || width <= 0 || start + width > c)
        throw std::invalid_argument("slice_cols: range [" + std::to_string(start) + ", " +
                                    std::to_string(start + width) + ") outside " +
                                    shape_str(a.shape()));
    std::vector<double> out((std::size_t)m * width);
    const auto av = a.data();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < width; ++j)
            out[(long)i * width + j] = av[(long)i * c + start + j];
    return TapeOps::finish(Op::SliceCols, a, nullptr, {m, width}, std::move(out), start);
}

Tensor softmax_rows(const Tensor& a)
{
    const int m = rows_of(a.shape()), c = cols_of(a.shape());
    const auto av = a.data();
    for (double v : av)
        if (std::isnan(v))
            throw std::runtime_error("softmax_rows: NaN input");
    std::vector<double> out((std::size_t)m * c);
    for (int i = 0; i < m; ++i) {
        double mx = av[(long)i * c];
        for (int j = 1; j < c; ++j)
            mx = std::max(mx, av[(long)i * c + j]);
        double denom = 0.0;
        for (int j = 0; j < c; ++j) {
            const double e      = std::exp(av[(long)i * c + j] - mx);
            out[(long)i * c + j] = e;
            denom += e;
        }
        for (int j = 0; j < c; ++j)
            out[(long)i * c + j] /= denom;
    }
    return TapeOps::finish(Op::SoftmaxRows, a, nullptr, a.shape(), std::move(out));
}

Tensor sum(const Tensor& a)
{
    double acc = 0.0;
    for (double v : a.data())
        acc += v;
    return TapeOps::finish(Op::Sum, a, nullptr, {1}, {acc});
}

Tensor mean(const Tensor& a)
{
    double acc = 0.0;
    for (double v : a.data())
        acc += v;
    return TapeOps::finish(Op::Mean, a, nullptr, {1}, {acc / (double)a.size()});
}

Tensor scale(const Tensor& a, double k)
{
    return TapeOps::finish(Op::Scale, a, nullptr, a.shape(),
                           ew_unary(a, [k](double x) { return k * x; }), 0, k);
}

Tensor row_sums(const Tensor& a)
{
    const int m = rows_of(a.shape()), c = cols_of(a.shape());
    std::vector<double> out(m, 0.0);
    const auto av = a.data();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < c; ++j)
            out[i] += av[(long)i * c + j];
    return TapeOps::finish(Op::RowSums, a, nullptr, {m, 1}, std::move(out));
}

Tensor col_sums(const Tensor& a)
{
    const int m = rows_of(a.shape()), c = cols_of(a.shape());
    std::vector<double> out(c, 0.0);
    const auto av = a.data();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < c; ++j)
            out[j] += av[(long)i * c + j];
    return TapeOps::finish(Op::ColSums, a, nullptr, {1, c}, std::move(out));
}

Tensor broadcast_rows(const Tensor& row, int n)
{
    if (rows_of(row.shape()) != 1)
        throw std::invalid_argument("broadcast_rows: expected a single row, got " +
                                    shape_str(row.shape()));
    const int c = cols_of(row.shape());
    std::vector<double> out((std::size_t)n * c);
    const auto rv = row.data();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j)
            out[(long)i * c + j] = rv[j];
    return TapeOps::finish(Op::BroadcastRows, row, nullptr, {n, c}, std::move(out));
}

Tensor scale_rows(const Tensor& a, const Tensor& c)
{
    const int m = rows_of(a.shape()), w = cols_of(a.shape());
    if ((long)c.size() != m)
        throw std::invalid_argument("scale_rows: row-scale length " + shape_str(c.shape()) +
                                    " does not match " + shape_str(a.shape()));
    std::vector<double> out((std::size_t)m * w);
    const auto av = a.data();
    const auto cv = c.data();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < w; ++j)
            out[(long)i * w + j] = av[(long)i * w + j] * cv[i];
    return TapeOps::finish(Op::ScaleRows, a, &c, a.shape(), std::move(out));
}

Tensor recip(const Tensor& a)
{
    return TapeOps::finish(Op::Recip, a, nullptr, a.shape(), ew_unary(a, [](double x) {
                               return x == 0.0 ? 0.0 : 1.0 / x;
                           }));
}

}  // namespace earth
