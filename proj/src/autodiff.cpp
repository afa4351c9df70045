#include "dfm/autodiff.hpp"

#include "dfm/error.hpp"
#include "dfm/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace dfm::ad {

namespace {

kernels::ConstMat cview(const Tensor& t) { return {t.data(), t.rows(), t.cols()}; }
kernels::Mat mview(Tensor& t) { return {t.data(), t.rows(), t.cols()}; }

[[noreturn]] void shape_fail(OpKind kind, const std::string& detail) {
    throw ShapeError("op " + std::string(op_name(kind)) + ": " + detail);
}

void require_same(OpKind kind, const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        shape_fail(kind, "shape mismatch " + a.shape_string() + " vs " + b.shape_string());
    }
}

void require_arity(OpKind kind, std::size_t got, std::size_t want) {
    if (got != want) {
        shape_fail(kind, "expected " + std::to_string(want) + " operands, got " + std::to_string(got));
    }
}

void accumulate(Tensor& into, const Tensor& g, double s = 1.0) {
    auto dst = into.values();
    auto src = g.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
}

Tensor reduce_shape(const Tensor& a, Axis axis) {
    return axis == Axis::All ? Tensor(1, 1) : Tensor(a.rows(), 1);
}

constexpr std::array kRegistered = {
    OpKind::Add,  OpKind::Subtract, OpKind::Multiply, OpKind::ScalarMultiply, OpKind::AddScalar,
    OpKind::MatMul, OpKind::Linear, OpKind::Concat,   OpKind::Selu,           OpKind::Exp,
    OpKind::Square, OpKind::Sum,    OpKind::Mean,     OpKind::SquaredNorm,    OpKind::MaxConst,
};

} // namespace

std::string_view op_name(OpKind kind) {
    switch (kind) {
    case OpKind::Leaf: return "leaf";
    case OpKind::Add: return "add";
    case OpKind::Subtract: return "subtract";
    case OpKind::Multiply: return "elementwise-multiply";
    case OpKind::ScalarMultiply: return "scalar-multiply";
    case OpKind::AddScalar: return "add-scalar";
    case OpKind::MatMul: return "matrix-multiply";
    case OpKind::Linear: return "linear";
    case OpKind::Concat: return "concatenate";
    case OpKind::Selu: return "selu";
    case OpKind::Exp: return "exponential";
    case OpKind::Square: return "square";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::SquaredNorm: return "squared-l2-norm";
    case OpKind::MaxConst: return "maximum-with-constant";
    case OpKind::Custom: return "custom";
    }
    return "unknown";
}

std::span<const OpKind> registered_ops() { return kRegistered; }

double selu_value(double x) noexcept {
    return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x);
}

const Tensor& Var::value() const { return tape->value(*this); }
const Tensor& Var::grad() const { return tape->grad(*this); }

Var Tape::push(Node node) {
    if (!node.value.all_finite()) {
        const std::string what = node.kind == OpKind::Custom ? node.custom_name : std::string(op_name(node.kind));
        throw NonFiniteError("op " + what + " produced a non-finite value");
    }
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
}

void Tape::check(Var v) const {
    if (v.tape != this || v.id >= nodes_.size()) {
        throw Error("variable does not belong to this tape");
    }
}

Var Tape::leaf(Tensor value, bool requires_grad) {
    if (value.empty()) throw ShapeError("leaf with empty tensor");
    Node n;
    n.kind = OpKind::Leaf;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return push(std::move(n));
}

Var Tape::detach(Var v) {
    check(v);
    return leaf(nodes_[v.id].value, false);
}

const Tensor& Tape::value(Var v) const {
    check(v);
    return nodes_[v.id].value;
}

const Tensor& Tape::grad(Var v) const {
    check(v);
    const Node& n = nodes_[v.id];
    if (n.grad.empty()) {
        throw Error("grad() requested before backward()");
    }
    return n.grad;
}

bool Tape::requires_grad(Var v) const {
    check(v);
    return nodes_[v.id].requires_grad;
}

OpKind Tape::kind(Var v) const {
    check(v);
    return nodes_[v.id].kind;
}

Var Tape::custom(std::string name, std::vector<Var> parents, Tensor value, CustomBackward backward) {
    Node n;
    n.kind = OpKind::Custom;
    n.value = std::move(value);
    n.custom_name = std::move(name);
    n.custom_backward = std::move(backward);
    for (const Var& p : parents) {
        check(p);
        n.parents.push_back(p.id);
        n.requires_grad = n.requires_grad || nodes_[p.id].requires_grad;
    }
    return push(std::move(n));
}

Var Tape::forward(OpKind kind, std::span<const Var> operands, const OpAttributes& attr) {
    for (const Var& v : operands) check(v);
    auto val = [&](std::size_t i) -> const Tensor& { return nodes_[operands[i].id].value; };

    Node n;
    n.kind = kind;
    n.attr = attr;
    for (const Var& v : operands) {
        n.parents.push_back(v.id);
        n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
    }

    switch (kind) {
    case OpKind::Add:
    case OpKind::Subtract:
    case OpKind::Multiply: {
        require_arity(kind, operands.size(), 2);
        const Tensor& a = val(0);
        const Tensor& b = val(1);
        require_same(kind, a, b);
        n.value = a;
        auto out = n.value.values();
        auto bv = b.values();
        if (kind == OpKind::Add) {
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
        } else if (kind == OpKind::Subtract) {
            for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
        } else {
            for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
        }
        break;
    }
    case OpKind::ScalarMultiply:
    case OpKind::AddScalar:
    case OpKind::Selu:
    case OpKind::Exp:
    case OpKind::Square:
    case OpKind::MaxConst: {
        require_arity(kind, operands.size(), 1);
        n.value = val(0);
        const double s = attr.scalar;
        for (double& x : n.value.values()) {
            switch (kind) {
            case OpKind::ScalarMultiply: x *= s; break;
            case OpKind::AddScalar: x += s; break;
            case OpKind::Selu: x = selu_value(x); break;
            case OpKind::Exp: x = std::exp(x); break;
            case OpKind::Square: x = x * x; break;
            default: x = x >= s ? x : s; break;
            }
        }
        break;
    }
    case OpKind::MatMul: {
        require_arity(kind, operands.size(), 2);
        const Tensor& a = val(0);
        const Tensor& b = val(1);
        if (a.cols() != b.rows()) {
            shape_fail(kind, "inner dimension mismatch " + a.shape_string() + " x " + b.shape_string());
        }
        n.value = Tensor(a.rows(), b.cols());
        kernels::gemm_nn(cview(a), cview(b), mview(n.value));
        break;
    }
    case OpKind::Linear: {
        require_arity(kind, operands.size(), 3);
        const Tensor& x = val(0);
        const Tensor& w = val(1);
        const Tensor& b = val(2);
        if (x.cols() != w.cols() || b.rows() != 1 || b.cols() != w.rows()) {
            shape_fail(kind, "incompatible shapes x" + x.shape_string() + " w" + w.shape_string() + " b" +
                                 b.shape_string());
        }
        n.value = Tensor(x.rows(), w.rows());
        kernels::gemm_nt(cview(x), cview(w), mview(n.value));
        for (std::size_t r = 0; r < n.value.rows(); ++r) {
            auto row = n.value.row_span(r);
            for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
        }
        break;
    }
    case OpKind::Concat: {
        if (operands.empty()) shape_fail(kind, "no operands");
        const std::size_t r = val(0).rows();
        std::size_t c = 0;
        for (std::size_t i = 0; i < operands.size(); ++i) {
            if (val(i).rows() != r) {
                shape_fail(kind, "row count mismatch " + val(0).shape_string() + " vs " + val(i).shape_string());
            }
            c += val(i).cols();
        }
        n.value = Tensor(r, c);
        for (std::size_t row = 0; row < r; ++row) {
            double* out = n.value.data() + row * c;
            for (std::size_t i = 0; i < operands.size(); ++i) {
                auto src = val(i).row_span(row);
                out = std::copy(src.begin(), src.end(), out);
            }
        }
        break;
    }
    case OpKind::Sum:
    case OpKind::Mean:
    case OpKind::SquaredNorm: {
        require_arity(kind, operands.size(), 1);
        const Tensor& a = val(0);
        n.value = reduce_shape(a, attr.axis);
        const std::size_t cols = a.cols();
        for (std::size_t r = 0; r < a.rows(); ++r) {
            double acc = 0.0;
            for (double x : a.row_span(r)) acc += kind == OpKind::SquaredNorm ? x * x : x;
            if (attr.axis == Axis::All) {
                n.value[0] += acc;
            } else {
                n.value[r] = kind == OpKind::Mean ? acc / static_cast<double>(cols) : acc;
            }
        }
        if (attr.axis == Axis::All && kind == OpKind::Mean) {
            n.value[0] /= static_cast<double>(a.size());
        }
        break;
    }
    case OpKind::Leaf:
    case OpKind::Custom:
        throw Error("op " + std::string(op_name(kind)) + " cannot be applied through forward()");
    }
    return push(std::move(n));
}

void Tape::backward(Var root) {
    check(root);
    if (nodes_[root.id].value.size() != 1) {
        throw ShapeError("backward requires a scalar root, got shape " + nodes_[root.id].value.shape_string());
    }
    for (Node& n : nodes_) n.grad = Tensor::zeros_like(n.value);
    nodes_[root.id].grad[0] = 1.0;
    for (std::size_t i = root.id + 1; i-- > 0;) {
        if (nodes_[i].requires_grad && nodes_[i].kind != OpKind::Leaf) propagate(i);
    }
}

void Tape::propagate(std::size_t id) {
    Node& n = nodes_[id];
    const Tensor& g = n.grad;
    auto parent = [&](std::size_t k) -> Node& { return nodes_[n.parents[k]]; };
    auto wants = [&](std::size_t k) { return parent(k).requires_grad; };

    switch (n.kind) {
    case OpKind::Add:
        if (wants(0)) accumulate(parent(0).grad, g);
        if (wants(1)) accumulate(parent(1).grad, g);
        break;
    case OpKind::Subtract:
        if (wants(0)) accumulate(parent(0).grad, g);
        if (wants(1)) accumulate(parent(1).grad, g, -1.0);
        break;
    case OpKind::Multiply: {
        for (std::size_t k = 0; k < 2; ++k) {
            if (!wants(k)) continue;
            auto dst = parent(k).grad.values();
            auto other = parent(1 - k).value.values();
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i] * other[i];
        }
        break;
    }
    case OpKind::ScalarMultiply:
        if (wants(0)) accumulate(parent(0).grad, g, n.attr.scalar);
        break;
    case OpKind::AddScalar:
        if (wants(0)) accumulate(parent(0).grad, g);
        break;
    case OpKind::Selu: {
        if (!wants(0)) break;
        auto dst = parent(0).grad.values();
        auto x = parent(0).value.values();
        for (std::size_t i = 0; i < dst.size(); ++i) {
            const double d = x[i] > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x[i]);
            dst[i] += g[i] * d;
        }
        break;
    }
    case OpKind::Exp: {
        if (!wants(0)) break;
        auto dst = parent(0).grad.values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i] * n.value[i];
        break;
    }
    case OpKind::Square: {
        if (!wants(0)) break;
        auto dst = parent(0).grad.values();
        auto x = parent(0).value.values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += 2.0 * x[i] * g[i];
        break;
    }
    case OpKind::MaxConst: {
        if (!wants(0)) break;
        auto dst = parent(0).grad.values();
        auto x = parent(0).value.values();
        for (std::size_t i = 0; i < dst.size(); ++i) {
            if (x[i] >= n.attr.scalar) dst[i] += g[i];
        }
        break;
    }
    case OpKind::MatMul: {
        const Tensor& a = parent(0).value;
        const Tensor& b = parent(1).value;
        if (wants(0)) {
            Tensor tmp(a.rows(), a.cols());
            kernels::gemm_nt(cview(g), cview(b), mview(tmp));
            accumulate(parent(0).grad, tmp);
        }
        if (wants(1)) {
            Tensor tmp(b.rows(), b.cols());
            kernels::gemm_tn(cview(a), cview(g), mview(tmp));
            accumulate(parent(1).grad, tmp);
        }
        break;
    }
    case OpKind::Linear: {
        const Tensor& x = parent(0).value;
        const Tensor& w = parent(1).value;
        if (wants(0)) {
            Tensor tmp(x.rows(), x.cols());
            kernels::gemm_nn(cview(g), cview(w), mview(tmp));
            accumulate(parent(0).grad, tmp);
        }
        if (wants(1)) {
            Tensor tmp(w.rows(), w.cols());
            kernels::gemm_tn(cview(g), cview(x), mview(tmp));
            accumulate(parent(1).grad, tmp);
        }
        if (wants(2)) {
            Tensor& gb = parent(2).grad;
            for (std::size_t r = 0; r < g.rows(); ++r) {
                auto row = g.row_span(r);
                for (std::size_t c = 0; c < row.size(); ++c) gb[c] += row[c];
            }
        }
        break;
    }
    case OpKind::Concat: {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < n.parents.size(); ++k) {
            Node& p = parent(k);
            const std::size_t pc = p.value.cols();
            if (p.requires_grad) {
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    auto src = g.row_span(r);
                    auto dst = p.grad.row_span(r);
                    for (std::size_t c = 0; c < pc; ++c) dst[c] += src[offset + c];
                }
            }
            offset += pc;
        }
        break;
    }
    case OpKind::Sum:
    case OpKind::Mean:
    case OpKind::SquaredNorm: {
        if (!wants(0)) break;
        Node& p = parent(0);
        const std::size_t cols = p.value.cols();
        double denom = 1.0;
        if (n.kind == OpKind::Mean) {
            denom = static_cast<double>(n.attr.axis == Axis::All ? p.value.size() : cols);
        }
        for (std::size_t r = 0; r < p.value.rows(); ++r) {
            const double up = (n.attr.axis == Axis::All ? g[0] : g[r]) / denom;
            auto dst = p.grad.row_span(r);
            auto x = p.value.row_span(r);
            for (std::size_t c = 0; c < cols; ++c) {
                dst[c] += n.kind == OpKind::SquaredNorm ? 2.0 * x[c] * up : up;
            }
        }
        break;
    }
    case OpKind::Custom: {
        std::vector<Tensor*> grads;
        grads.reserve(n.parents.size());
        for (std::size_t k = 0; k < n.parents.size(); ++k) {
            grads.push_back(wants(k) ? &parent(k).grad : nullptr);
        }
        n.custom_backward(g, grads);
        break;
    }
    case OpKind::Leaf:
        break;
    }
}

namespace {
Var unary(OpKind k, Var a, double s = 0.0, Axis axis = Axis::All) {
    const std::array ops{a};
    return a.tape->forward(k, ops, OpAttributes{s, axis});
}
Var binary(OpKind k, Var a, Var b) {
    const std::array ops{a, b};
    return a.tape->forward(k, ops);
}
} // namespace

Var add(Var a, Var b) { return binary(OpKind::Add, a, b); }
Var sub(Var a, Var b) { return binary(OpKind::Subtract, a, b); }
Var mul(Var a, Var b) { return binary(OpKind::Multiply, a, b); }
Var scale(Var a, double s) { return unary(OpKind::ScalarMultiply, a, s); }
Var add_scalar(Var a, double s) { return unary(OpKind::AddScalar, a, s); }
Var matmul(Var a, Var b) { return binary(OpKind::MatMul, a, b); }
Var linear(Var x, Var w, Var b) {
    const std::array ops{x, w, b};
    return x.tape->forward(OpKind::Linear, ops);
}
Var concat(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("op concatenate: no operands");
    return parts[0].tape->forward(OpKind::Concat, parts);
}
Var selu(Var a) { return unary(OpKind::Selu, a); }
Var exp(Var a) { return unary(OpKind::Exp, a); }
Var square(Var a) { return unary(OpKind::Square, a); }
Var sum(Var a, Axis axis) { return unary(OpKind::Sum, a, 0.0, axis); }
Var mean(Var a, Axis axis) { return unary(OpKind::Mean, a, 0.0, axis); }
Var squared_norm(Var a, Axis axis) { return unary(OpKind::SquaredNorm, a, 0.0, axis); }
Var max_const(Var a, double floor) { return unary(OpKind::MaxConst, a, floor); }

Var repeat_cols(Var col, std::size_t n) {
    const Tensor& c = col.value();
    if (c.cols() != 1 || n == 0) {
        throw ShapeError("op repeat-columns: expected a column and n > 0, got " + c.shape_string());
    }
    Tensor out(c.rows(), n);
    for (std::size_t r = 0; r < c.rows(); ++r) {
        for (std::size_t j = 0; j < n; ++j) out(r, j) = c[r];
    }
    return col.tape->custom("repeat-columns", {col}, std::move(out),
                            [n](const Tensor& g, std::span<Tensor* const> grads) {
                                if (!grads[0]) return;
                                for (std::size_t r = 0; r < g.rows(); ++r) {
                                    double acc = 0.0;
                                    for (std::size_t j = 0; j < n; ++j) acc += g(r, j);
                                    (*grads[0])[r] += acc;
                                }
                            });
}

double finite_diff_check(const GradFunction& f, std::span<const double> point, double step) {
    std::vector<double> x(point.begin(), point.end());
    std::vector<double> analytic(x.size(), 0.0);
    f(x, analytic);
    double diff2 = 0.0;
    double a2 = 0.0;
    double n2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + step;
        const double up = f(x, {});
        x[i] = orig - step;
        const double down = f(x, {});
        x[i] = orig;
        const double numeric = (up - down) / (2.0 * step);
        diff2 += (analytic[i] - numeric) * (analytic[i] - numeric);
        a2 += analytic[i] * analytic[i];
        n2 += numeric * numeric;
    }
    return std::sqrt(diff2) / std::max({std::sqrt(a2), std::sqrt(n2), 1e-12});
}

} // namespace dfm::ad
