#pragma once

#include "dfm/tensor.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dfm::ad {

enum class OpKind {
    Leaf,
    Add,
    Subtract,
    Multiply,       // elementwise
    ScalarMultiply, // attr.scalar * a
    AddScalar,      // a + attr.scalar
    MatMul,         // a[m,k] * b[k,n]
    Linear,         // x[m,k] * w[n,k]^T + b[1,n]
    Concat,         // along columns
    Selu,
    Exp,
    Square,
    Sum,
    Mean,
    SquaredNorm,
    MaxConst, // max(a, attr.scalar)
    Custom,
};

std::string_view op_name(OpKind kind);

/// Every differentiable op kind that `forward` accepts.
std::span<const OpKind> registered_ops();

enum class Axis {
    All,  // reduce to a [1,1] scalar
    Rows, // reduce each row to one column: [r,c] -> [r,1]
};

struct OpAttributes {
    double scalar = 0.0;
    Axis axis = Axis::All;
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    const Tensor& grad() const;
};

/// Receives the upstream gradient and adds into each parent's gradient.
/// Entries of `parent_grads` are nullptr for parents that need no gradient.
using CustomBackward = std::function<void(const Tensor& grad_out, std::span<Tensor* const> parent_grads)>;

/// Reverse-mode tape. Nodes are appended in evaluation order, so the node
/// vector is already a topological order and `backward` walks it in reverse.
/// Gradients accumulate: a node used twice receives both contributions.
class Tape {
public:
    Var leaf(Tensor value, bool requires_grad = true);
    Var constant(Tensor value) { return leaf(std::move(value), false); }
    /// Constant copy of v's current value; gradients do not flow through it.
    Var detach(Var v);

    Var forward(OpKind kind, std::span<const Var> operands, const OpAttributes& attr = {});
    Var custom(std::string name, std::vector<Var> parents, Tensor value, CustomBackward backward);

    /// Populates grad() on every node. Root must hold a single element.
    void backward(Var root);

    const Tensor& value(Var v) const;
    const Tensor& grad(Var v) const;
    bool requires_grad(Var v) const;
    OpKind kind(Var v) const;
    std::size_t size() const noexcept { return nodes_.size(); }
    void clear() noexcept { nodes_.clear(); }

private:
    struct Node {
        OpKind kind = OpKind::Leaf;
        Tensor value;
        Tensor grad;
        std::vector<std::size_t> parents;
        OpAttributes attr;
        bool requires_grad = false;
        std::string custom_name;
        CustomBackward custom_backward;
    };

    Var push(Node node);
    void check(Var v) const;
    void propagate(std::size_t id);

    std::vector<Node> nodes_;
};

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var matmul(Var a, Var b);
Var linear(Var x, Var w, Var b);
Var concat(std::span<const Var> parts);
Var selu(Var a);
Var exp(Var a);
Var square(Var a);
Var sum(Var a, Axis axis = Axis::All);
Var mean(Var a, Axis axis = Axis::All);
Var squared_norm(Var a, Axis axis = Axis::All);
Var max_const(Var a, double floor);
/// [r,1] column copied into n columns: [r,n]. Backward sums across columns.
Var repeat_cols(Var col, std::size_t n);

inline constexpr double kSeluAlpha = 1.6732632423543772;
inline constexpr double kSeluLambda = 1.0507009873554805;

double selu_value(double x) noexcept;

/// Scalar function of a flat parameter vector. When `grad` is non-empty it
/// must also write the analytic gradient there.
using GradFunction = std::function<double(std::span<const double> x, std::span<double> grad)>;

/// |analytic - central difference| / max(|analytic|, |central difference|),
/// Euclidean norms over all coordinates.
double finite_diff_check(const GradFunction& f, std::span<const double> point, double step);

} // namespace dfm::ad
