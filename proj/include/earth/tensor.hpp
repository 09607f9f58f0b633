#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

// Dense row-major double tensors with an optional reverse-mode gradient tape.
// A Tensor not attached to a tape is a plain value; ops on plain values do no
// recording. Reductions run left-to-right so forward passes are bitwise
// reproducible.

namespace earth {

using Shape = std::vector<int>;

class GradientTape;

std::string shape_str(const Shape& s);

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);  // zero-filled
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double v);
    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double v);
    // 2-D convenience: row-major nested list.
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor vector(std::initializer_list<double> v);

    const Shape& shape() const { return shape_; }
    int rank() const { return (int)shape_.size(); }
    int rows() const;
    int cols() const;
    long size() const;

    double at(int i) const;
    double at(int i, int j) const;
    double value() const;  // scalar tensors only

    std::span<const double> data() const;
    // In-place mutation; only valid on tensors not referenced by a live tape.
    std::vector<double>& mutable_data();

    bool on_tape() const { return tape_ != nullptr; }
    GradientTape* tape() const { return tape_; }
    int tape_id() const { return tape_id_; }

    bool all_finite() const;

private:
    friend class GradientTape;
    friend struct TapeOps;

    Shape shape_;
    std::shared_ptr<std::vector<double>> data_;
    GradientTape* tape_ = nullptr;
    int tape_id_        = -1;
};

// Gradients keyed by the leaf uid given to GradientTape::leaf.
using GradMap = std::unordered_map<int, Tensor>;

class GradientTape {
public:
    enum class Op : uint8_t {
        Leaf,
        Matmul,
        Transpose,
        Add,
        Sub,
        Mul,
        Axpy,
        Neg,
        Tanh,
        Sigmoid,
        Relu,
        Abs,
        ConcatCols,
        SliceCols,
        SoftmaxRows,
        Sum,
        Mean,
        Scale,
        RowSums,
        ColSums,
        BroadcastRows,
        ScaleRows,
        Recip,
    };

    GradientTape() = default;
    GradientTape(const GradientTape&)            = delete;
    GradientTape& operator=(const GradientTape&) = delete;

    // Copies `init` onto the tape as a differentiable leaf. `uid >= 0` makes
    // the leaf show up in the gradient map under that key.
    Tensor leaf(const Tensor& init, int uid = -1);

    // Reverse pass from a scalar loss. Gradients of all uid-tagged leaves are
    // returned; an off-tape (constant) loss yields an empty map.
    GradMap backward(const Tensor& loss);

    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }

private:
    struct Node {
        Op op;
        int a = -1;  // parent ids; -1 for none
        int b = -1;
        // Operand snapshots (shared buffers); needed when a parent is an
        // off-tape constant and for local gradient rules.
        std::shared_ptr<std::vector<double>> aval;
        std::shared_ptr<std::vector<double>> bval;
        Shape ashape;
        Shape bshape;
        Shape shape;
        std::shared_ptr<std::vector<double>> value;
        int attr0   = 0;  // op-specific (slice start, broadcast rows, ...)
        double coef = 0.0;
        int uid     = -1;
    };

    int record(Node n);
    Tensor wrap(int id);

    std::vector<Node> nodes_;

    friend struct TapeOps;  // implementation-side recording hook
};

// --- operations ------------------------------------------------------------
// Mixed taped/plain operands are allowed; if both are taped they must share a
// tape. Elementwise binary ops broadcast only scalar-with-tensor.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor axpy(const Tensor& a, const Tensor& b, double k);  // a + k*b, fused
Tensor neg(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor concat_last_axis(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& a, int start, int width);
Tensor softmax_rows(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor scale(const Tensor& a, double k);   // multiply by a plain constant
Tensor row_sums(const Tensor& a);          // m x n -> m x 1
Tensor col_sums(const Tensor& a);          // m x n -> 1 x n
Tensor broadcast_rows(const Tensor& row, int n);  // 1 x d -> n x d
Tensor scale_rows(const Tensor& a, const Tensor& c);  // a_ij * c_i
Tensor recip(const Tensor& a);

}  // namespace earth
