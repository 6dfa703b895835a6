#include "stella/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "stella/rng.hpp"

namespace stella {

void tensor_fail(const std::string& msg) { throw std::runtime_error(msg); }

int64_t numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t e : s) n *= e;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
}

void Node::ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
}

namespace {

std::shared_ptr<Node> make_node(Shape shape, bool rg) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value.assign(static_cast<size_t>(numel(n->shape)), 0.0);
    n->requires_grad = rg;
    return n;
}

std::vector<int64_t> contiguous_strides(const Shape& s) {
    std::vector<int64_t> st(s.size());
    int64_t acc = 1;
    for (size_t i = s.size(); i-- > 0;) {
        st[i] = acc;
        acc *= s[i];
    }
    return st;
}

Shape broadcast_shape(const Shape& a, const Shape& b) {
    size_t r = std::max(a.size(), b.size());
    Shape out(r);
    for (size_t i = 0; i < r; ++i) {
        int64_t ea = i < r - a.size() ? 1 : a[i - (r - a.size())];
        int64_t eb = i < r - b.size() ? 1 : b[i - (r - b.size())];
        if (ea != eb && ea != 1 && eb != 1)
            tensor_fail("broadcast mismatch: " + shape_str(a) + " vs " + shape_str(b));
        out[i] = std::max(ea, eb);
    }
    return out;
}

// Strides of `in` when iterated with coordinates of the broadcast shape `out`
// (zero stride along broadcast axes).
std::vector<int64_t> broadcast_strides(const Shape& in, const Shape& out) {
    std::vector<int64_t> st(out.size(), 0);
    auto cs = contiguous_strides(in);
    size_t off = out.size() - in.size();
    for (size_t i = 0; i < in.size(); ++i)
        st[off + i] = in[i] == 1 ? 0 : cs[i];
    return st;
}

// Iterates coordinates of `shape`, calling f(out_flat, a_flat, b_flat).
template <typename F>
void for_each_broadcast(const Shape& shape, const std::vector<int64_t>& sa,
                        const std::vector<int64_t>& sb, F f) {
    int64_t n = numel(shape);
    size_t r = shape.size();
    std::vector<int64_t> coord(r, 0);
    int64_t ia = 0, ib = 0;
    for (int64_t i = 0; i < n; ++i) {
        f(i, ia, ib);
        for (size_t d = r; d-- > 0;) {
            ++coord[d];
            ia += sa[d];
            ib += sb[d];
            if (coord[d] < shape[d]) break;
            ia -= sa[d] * shape[d];
            ib -= sb[d] * shape[d];
            coord[d] = 0;
        }
    }
}

using BinFwd = real (*)(real, real);
using BinBwd = void (*)(real, real, real, real&, real&);  // (a, b, dy, da, db)

Tensor binary_op(const Tensor& ta, const Tensor& tb, BinFwd fwd, BinBwd bwd) {
    auto a = ta.node();
    auto b = tb.node();
    Shape oshape = broadcast_shape(a->shape, b->shape);
    auto sa = broadcast_strides(a->shape, oshape);
    auto sb = broadcast_strides(b->shape, oshape);
    bool rg = a->requires_grad || b->requires_grad;
    auto out = make_node(oshape, rg);
    for_each_broadcast(oshape, sa, sb, [&](int64_t i, int64_t ia, int64_t ib) {
        out->value[static_cast<size_t>(i)] =
            fwd(a->value[static_cast<size_t>(ia)], b->value[static_cast<size_t>(ib)]);
    });
    if (rg) {
        out->parents = {a, b};
        Node* op = out.get();
        out->backward_fn = [op, a, b, sa, sb, bwd]() {
            if (a->requires_grad) a->ensure_grad();
            if (b->requires_grad) b->ensure_grad();
            for_each_broadcast(op->shape, sa, sb, [&](int64_t i, int64_t ia, int64_t ib) {
                real da = 0, db = 0;
                bwd(a->value[static_cast<size_t>(ia)], b->value[static_cast<size_t>(ib)],
                    op->grad[static_cast<size_t>(i)], da, db);
                if (a->requires_grad) a->grad[static_cast<size_t>(ia)] += da;
                if (b->requires_grad) b->grad[static_cast<size_t>(ib)] += db;
            });
        };
    }
    return Tensor(out);
}

using UnFwd = real (*)(real);
using UnBwd = real (*)(real, real);  // (x, y) -> dy/dx

Tensor unary_op(const Tensor& ta, UnFwd fwd, UnBwd bwd) {
    auto a = ta.node();
    auto out = make_node(a->shape, a->requires_grad);
    for (size_t i = 0; i < a->value.size(); ++i) out->value[i] = fwd(a->value[i]);
    if (a->requires_grad) {
        out->parents = {a};
        Node* op = out.get();
        out->backward_fn = [op, a, bwd]() {
            a->ensure_grad();
            for (size_t i = 0; i < a->value.size(); ++i)
                a->grad[i] += op->grad[i] * bwd(a->value[i], op->value[i]);
        };
    }
    return Tensor(out);
}

constexpr real kInvSqrt2 = 0.7071067811865475244;
constexpr real kInvSqrt2Pi = 0.3989422804014326779;

}  // namespace

Tensor Tensor::zeros(Shape shape, bool rg) { return Tensor(make_node(std::move(shape), rg)); }

Tensor Tensor::full(Shape shape, real v, bool rg) {
    auto n = make_node(std::move(shape), rg);
    std::fill(n->value.begin(), n->value.end(), v);
    return Tensor(n);
}

Tensor Tensor::from(Shape shape, std::vector<real> data, bool rg) {
    if (numel(shape) != static_cast<int64_t>(data.size()))
        tensor_fail("Tensor::from: shape " + shape_str(shape) + " does not match data length " +
                    std::to_string(data.size()));
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(data);
    n->requires_grad = rg;
    return Tensor(n);
}

Tensor Tensor::scalar(real v, bool rg) { return full({}, v, rg); }

real Tensor::item() const {
    if (size() != 1) tensor_fail("item() on non-scalar tensor " + shape_str(shape()));
    return node_->value[0];
}

real Tensor::at(std::initializer_list<int64_t> idx) const {
    auto st = contiguous_strides(node_->shape);
    int64_t flat = 0;
    size_t d = 0;
    for (int64_t i : idx) flat += i * st[d++];
    return node_->value[static_cast<size_t>(flat)];
}

void Tensor::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

Tensor Tensor::detach() const {
    auto n = std::make_shared<Node>();
    n->shape = node_->shape;
    n->value = node_->value;
    n->requires_grad = false;
    return Tensor(n);
}

void Tensor::backward() {
    if (size() != 1) tensor_fail("backward() requires a scalar loss");
    // Topological order over the reachable tape.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (!seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    node_->ensure_grad();
    node_->grad[0] = 1.0;
    for (size_t i = order.size(); i-- > 0;) {
        Node* n = order[i];
        if (n->backward_fn && !n->grad.empty()) n->backward_fn();
    }
}

// ---- elementwise ----

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, [](real x, real y) { return x + y; },
        [](real, real, real dy, real& da, real& db) {
            da = dy;
            db = dy;
        });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, [](real x, real y) { return x - y; },
        [](real, real, real dy, real& da, real& db) {
            da = dy;
            db = -dy;
        });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, [](real x, real y) { return x * y; },
        [](real x, real y, real dy, real& da, real& db) {
            da = dy * y;
            db = dy * x;
        });
}

Tensor div(const Tensor& a, const Tensor& b) {
    for (real v : b.data())
        if (v == 0.0) tensor_fail("division by zero without an epsilon guard");
    return binary_op(
        a, b, [](real x, real y) { return x / y; },
        [](real x, real y, real dy, real& da, real& db) {
            da = dy / y;
            db = -dy * x / (y * y);
        });
}

Tensor neg(const Tensor& a) {
    return unary_op(
        a, [](real x) { return -x; }, [](real, real) { return -1.0; });
}

Tensor exp(const Tensor& a) {
    return unary_op(
        a, [](real x) { return std::exp(x); }, [](real, real y) { return y; });
}

Tensor log(const Tensor& a) {
    return unary_op(
        a, [](real x) { return std::log(x); }, [](real x, real) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
    return unary_op(
        a, [](real x) { return std::sqrt(x); },
        [](real, real y) { return 0.5 / y; });
}

Tensor tanh(const Tensor& a) {
    return unary_op(
        a, [](real x) { return std::tanh(x); }, [](real, real y) { return 1.0 - y * y; });
}

Tensor abs(const Tensor& a) {
    // Subgradient 0 at the kink.
    return unary_op(
        a, [](real x) { return std::abs(x); },
        [](real x, real) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Tensor sigmoid(const Tensor& a) {
    return unary_op(
        a, [](real x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](real, real y) { return y * (1.0 - y); });
}

Tensor gelu(const Tensor& a) {
    // Exact erf form.
    return unary_op(
        a, [](real x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
        [](real x, real) {
            return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) +
                   x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
        });
}

// ---- reductions ----

Tensor sum(const Tensor& ta) {
    auto a = ta.node();
    auto out = make_node(Shape{}, a->requires_grad);
    real acc = 0;
    for (real v : a->value) acc += v;
    out->value[0] = acc;
    if (a->requires_grad) {
        out->parents = {a};
        Node* op = out.get();
        out->backward_fn = [op, a]() {
            a->ensure_grad();
            for (real& g : a->grad) g += op->grad[0];
        };
    }
    return Tensor(out);
}

Tensor mean(const Tensor& a) { return sum(a) / static_cast<real>(a.size()); }

namespace {
void check_axis(const Shape& s, int64_t axis) {
    if (axis < 0 || axis >= static_cast<int64_t>(s.size()))
        tensor_fail("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
}
}  // namespace

Tensor sum(const Tensor& ta, int64_t axis, bool keepdim) {
    auto a = ta.node();
    check_axis(a->shape, axis);
    Shape oshape = a->shape;
    oshape[static_cast<size_t>(axis)] = 1;
    int64_t outer = 1, inner = 1, ax = a->shape[static_cast<size_t>(axis)];
    for (int64_t i = 0; i < axis; ++i) outer *= a->shape[static_cast<size_t>(i)];
    for (size_t i = static_cast<size_t>(axis) + 1; i < a->shape.size(); ++i) inner *= a->shape[i];
    auto out = make_node(oshape, a->requires_grad);
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t j = 0; j < ax; ++j)
            for (int64_t k = 0; k < inner; ++k)
                out->value[static_cast<size_t>(o * inner + k)] +=
                    a->value[static_cast<size_t>((o * ax + j) * inner + k)];
    if (a->requires_grad) {
        out->parents = {a};
        Node* op = out.get();
        out->backward_fn = [op, a, outer, inner, ax]() {
            a->ensure_grad();
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t j = 0; j < ax; ++j)
                    for (int64_t k = 0; k < inner; ++k)
                        a->grad[static_cast<size_t>((o * ax + j) * inner + k)] +=
                            op->grad[static_cast<size_t>(o * inner + k)];
        };
    }
    Tensor res(out);
    if (!keepdim) {
        Shape sq = a->shape;
        sq.erase(sq.begin() + axis);
        res = reshape(res, sq);
    }
    return res;
}

Tensor mean(const Tensor& a, int64_t axis, bool keepdim) {
    return sum(a, axis, keepdim) / static_cast<real>(a.shape()[static_cast<size_t>(axis)]);
}

Tensor max_detached(const Tensor& ta, int64_t axis, bool keepdim) {
    auto a = ta.node();
    check_axis(a->shape, axis);
    Shape oshape = a->shape;
    oshape[static_cast<size_t>(axis)] = 1;
    int64_t outer = 1, inner = 1, ax = a->shape[static_cast<size_t>(axis)];
    for (int64_t i = 0; i < axis; ++i) outer *= a->shape[static_cast<size_t>(i)];
    for (size_t i = static_cast<size_t>(axis) + 1; i < a->shape.size(); ++i) inner *= a->shape[i];
    auto out = make_node(oshape, false);
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t k = 0; k < inner; ++k) {
            real m = a->value[static_cast<size_t>(o * ax * inner + k)];
            for (int64_t j = 1; j < ax; ++j)
                m = std::max(m, a->value[static_cast<size_t>((o * ax + j) * inner + k)]);
            out->value[static_cast<size_t>(o * inner + k)] = m;
        }
    Tensor res(out);
    if (!keepdim) {
        Shape sq = a->shape;
        sq.erase(sq.begin() + axis);
        res = reshape(res, sq);
    }
    return res;
}

// ---- shape ----

Tensor reshape(const Tensor& ta, Shape shape) {
    auto a = ta.node();
    if (numel(shape) != numel(a->shape))
        tensor_fail("reshape " + shape_str(a->shape) + " -> " + shape_str(shape));
    auto out = std::make_shared<Node>();
    out->shape = std::move(shape);
    out->value = a->value;
    out->requires_grad = a->requires_grad;
    if (a->requires_grad) {
        out->parents = {a};
        Node* op = out.get();
        out->backward_fn = [op, a]() {
            a->ensure_grad();
            for (size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += op->grad[i];
        };
    }
    return Tensor(out);
}

Tensor permute(const Tensor& ta, const std::vector<int64_t>& perm) {
    auto a = ta.node();
    size_t r = a->shape.size();
    if (perm.size() != r) tensor_fail("permute rank mismatch");
    Shape oshape(r);
    for (size_t i = 0; i < r; ++i) oshape[i] = a->shape[static_cast<size_t>(perm[i])];
    auto in_strides = contiguous_strides(a->shape);
    std::vector<int64_t> gather(r);
    for (size_t i = 0; i < r; ++i) gather[i] = in_strides[static_cast<size_t>(perm[i])];
    auto out = make_node(oshape, a->requires_grad);
    int64_t n = numel(oshape);
    std::vector<int64_t> coord(r, 0);
    std::vector<int64_t> src_index(static_cast<size_t>(n));
    int64_t ia = 0;
    for (int64_t i = 0; i < n; ++i) {
        src_index[static_cast<size_t>(i)] = ia;
        out->value[static_cast<size_t>(i)] = a->value[static_cast<size_t>(ia)];
        for (size_t d = r; d-- > 0;) {
            ++coord[d];
            ia += gather[d];
            if (coord[d] < oshape[d]) break;
            ia -= gather[d] * oshape[d];
            coord[d] = 0;
        }
    }
    if (a->requires_grad) {
        out->parents = {a};
        Node* op = out.get();
        out->backward_fn = [op, a, src_index = std::move(src_index)]() {
            a->ensure_grad();
            for (size_t i = 0; i < src_index.size(); ++i)
                a->grad[static_cast<size_t>(src_index[i])] += op->grad[i];
        };
    }
    return Tensor(out);
}

Tensor slice(const Tensor& ta, int64_t axis, int64_t start, int64_t len) {
    auto a = ta.node();
    check_axis(a->shape, axis);
    int64_t ax = a->shape[static_cast<size_t>(axis)];
    if (start < 0 || len < 0 || start + len > ax)
        tensor_fail("slice [" + std::to_string(start) + "," + std::to_string(start + len) +
                    ") out of range for axis extent " + std::to_string(ax));
    Shape oshape = a->shape;
    oshape[static_cast<size_t>(axis)] = len;
    int64_t outer = 1, inner = 1;
    for (int64_t i = 0; i < axis; ++i) outer *= a->shape[static_cast<size_t>(i)];
    for (size_t i = static_cast<size_t>(axis) + 1; i < a->shape.size(); ++i) inner *= a->shape[i];
    auto out = make_node(oshape, a->requires_grad);
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t j = 0; j < len; ++j)
            std::copy_n(a->value.begin() + (o * ax + start + j) * inner, inner,
                        out->value.begin() + (o * len + j) * inner);
    if (a->requires_grad) {
        out->parents = {a};
        Node* op = out.get();
        out->backward_fn = [op, a, outer, inner, ax, len, start]() {
            a->ensure_grad();
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t j = 0; j < len; ++j)
                    for (int64_t k = 0; k < inner; ++k)
                        a->grad[static_cast<size_t>((o * ax + start + j) * inner + k)] +=
                            op->grad[static_cast<size_t>((o * len + j) * inner + k)];
        };
    }
    return Tensor(out);
}

Tensor concat(const std::vector<Tensor>& parts, int64_t axis) {
    if (parts.empty()) tensor_fail("concat of zero tensors");
    const Shape& s0 = parts[0].shape();
    check_axis(s0, axis);
    int64_t total = 0;
    bool rg = false;
    for (const Tensor& p : parts) {
        if (p.dim() != static_cast<int64_t>(s0.size())) tensor_fail("concat rank mismatch");
        for (size_t d = 0; d < s0.size(); ++d)
            if (static_cast<int64_t>(d) != axis && p.shape()[d] != s0[d])
                tensor_fail("concat shape mismatch: " + shape_str(p.shape()) + " vs " +
                            shape_str(s0));
        total += p.shape()[static_cast<size_t>(axis)];
        rg = rg || p.requires_grad();
    }
    Shape oshape = s0;
    oshape[static_cast<size_t>(axis)] = total;
    int64_t outer = 1, inner = 1;
    for (int64_t i = 0; i < axis; ++i) outer *= s0[static_cast<size_t>(i)];
    for (size_t i = static_cast<size_t>(axis) + 1; i < s0.size(); ++i) inner *= s0[i];
    auto out = make_node(oshape, rg);
    int64_t off = 0;
    for (const Tensor& p : parts) {
        int64_t len = p.shape()[static_cast<size_t>(axis)];
        for (int64_t o = 0; o < outer; ++o)
            std::copy_n(p.data().begin() + o * len * inner, len * inner,
                        out->value.begin() + (o * total + off) * inner);
        off += len;
    }
    if (rg) {
        for (const Tensor& p : parts) out->parents.push_back(p.node());
        Node* op = out.get();
        auto parents = out->parents;
        out->backward_fn = [op, parents, outer, inner, total]() {
            int64_t off = 0;
            for (const auto& pn : parents) {
                int64_t len = numel(pn->shape) / (outer * inner);
                if (pn->requires_grad) {
                    pn->ensure_grad();
                    for (int64_t o = 0; o < outer; ++o)
                        for (int64_t j = 0; j < len * inner; ++j)
                            pn->grad[static_cast<size_t>(o * len * inner + j)] +=
                                op->grad[static_cast<size_t>((o * total + off) * inner + j)];
                }
                off += len;
            }
        };
    }
    return Tensor(out);
}

// ---- matmul ----

Tensor matmul(const Tensor& ta, const Tensor& tb) {
    auto a = ta.node();
    auto b = tb.node();
    int64_t ra = static_cast<int64_t>(a->shape.size());
    int64_t rb = static_cast<int64_t>(b->shape.size());
    if (!((ra == 2 && rb == 2) || (ra == 3 && rb == 3)))
        tensor_fail("matmul supports 2-D or batched 3-D: " + shape_str(a->shape) + " x " +
                    shape_str(b->shape));
    int64_t batch = ra == 3 ? a->shape[0] : 1;
    int64_t m = a->shape[static_cast<size_t>(ra - 2)];
    int64_t k = a->shape[static_cast<size_t>(ra - 1)];
    int64_t k2 = b->shape[static_cast<size_t>(rb - 2)];
    int64_t n = b->shape[static_cast<size_t>(rb - 1)];
    if (k != k2 || (ra == 3 && a->shape[0] != b->shape[0]))
        tensor_fail("matmul shape mismatch: " + shape_str(a->shape) + " x " + shape_str(b->shape));
    Shape oshape = ra == 3 ? Shape{batch, m, n} : Shape{m, n};
    bool rg = a->requires_grad || b->requires_grad;
    auto out = make_node(oshape, rg);
    const real* A = a->value.data();
    const real* B = b->value.data();
    real* Y = out->value.data();
    for (int64_t bi = 0; bi < batch; ++bi) {
        const real* Ab = A + bi * m * k;
        const real* Bb = B + bi * k * n;
        real* Yb = Y + bi * m * n;
        for (int64_t i = 0; i < m; ++i)
            for (int64_t kk = 0; kk < k; ++kk) {
                real av = Ab[i * k + kk];
                if (av == 0.0) continue;
                const real* Br = Bb + kk * n;
                real* Yr = Yb + i * n;
                for (int64_t j = 0; j < n; ++j) Yr[j] += av * Br[j];
            }
    }
    if (rg) {
        out->parents = {a, b};
        Node* op = out.get();
        out->backward_fn = [op, a, b, batch, m, k, n]() {
            if (a->requires_grad) {
                a->ensure_grad();
                for (int64_t bi = 0; bi < batch; ++bi)
                    for (int64_t i = 0; i < m; ++i)
                        for (int64_t j = 0; j < n; ++j) {
                            real dy = op->grad[static_cast<size_t>((bi * m + i) * n + j)];
                            if (dy == 0.0) continue;
                            for (int64_t kk = 0; kk < k; ++kk)
                                a->grad[static_cast<size_t>((bi * m + i) * k + kk)] +=
                                    dy * b->value[static_cast<size_t>((bi * k + kk) * n + j)];
                        }
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (int64_t bi = 0; bi < batch; ++bi)
                    for (int64_t i = 0; i < m; ++i)
                        for (int64_t kk = 0; kk < k; ++kk) {
                            real av = a->value[static_cast<size_t>((bi * m + i) * k + kk)];
                            if (av == 0.0) continue;
                            for (int64_t j = 0; j < n; ++j)
                                b->grad[static_cast<size_t>((bi * k + kk) * n + j)] +=
                                    av * op->grad[static_cast<size_t>((bi * m + i) * n + j)];
                        }
            }
        };
    }
    return Tensor(out);
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    int64_t in = w.shape()[0];
    int64_t out_dim = w.shape()[1];
    if (x.shape().back() != in)
        tensor_fail("linear: input width " + std::to_string(x.shape().back()) +
                    " != weight rows " + std::to_string(in));
    Shape xs = x.shape();
    Tensor flat = reshape(x, {x.size() / in, in});
    Tensor y = matmul(flat, w);
    if (b.defined()) y = y + reshape(b, {1, out_dim});
    Shape os = xs;
    os.back() = out_dim;
    return reshape(y, os);
}

// ---- convolutions ----

Tensor conv1d_causal(const Tensor& tx, const Tensor& tw, const Tensor& tbias, int64_t dilation) {
    auto x = tx.node();
    auto w = tw.node();
    if (x->shape.size() != 3 || w->shape.size() != 3)
        tensor_fail("conv1d_causal expects x(N,C,L), w(Cout,Cin,K)");
    int64_t N = x->shape[0], Cin = x->shape[1], L = x->shape[2];
    int64_t Cout = w->shape[0], K = w->shape[2];
    if (w->shape[1] != Cin)
        tensor_fail("conv1d_causal channel mismatch: " + shape_str(x->shape) + " vs " +
                    shape_str(w->shape));
    bool has_bias = tbias.defined();
    bool rg = x->requires_grad || w->requires_grad || (has_bias && tbias.requires_grad());
    auto out = make_node({N, Cout, L}, rg);
    for (int64_t nn = 0; nn < N; ++nn)
        for (int64_t co = 0; co < Cout; ++co)
            for (int64_t t = 0; t < L; ++t) {
                real acc = has_bias ? tbias.data()[static_cast<size_t>(co)] : 0.0;
                for (int64_t ci = 0; ci < Cin; ++ci)
                    for (int64_t kk = 0; kk < K; ++kk) {
                        int64_t src = t - dilation * kk;
                        if (src < 0) continue;
                        acc += w->value[static_cast<size_t>((co * Cin + ci) * K + kk)] *
                               x->value[static_cast<size_t>((nn * Cin + ci) * L + src)];
                    }
                out->value[static_cast<size_t>((nn * Cout + co) * L + t)] = acc;
            }
    if (rg) {
        out->parents = {x, w};
        if (has_bias) out->parents.push_back(tbias.node());
        Node* op = out.get();
        auto bias_node = has_bias ? tbias.node() : nullptr;
        out->backward_fn = [op, x, w, bias_node, N, Cin, Cout, L, K, dilation]() {
            if (x->requires_grad) x->ensure_grad();
            if (w->requires_grad) w->ensure_grad();
            if (bias_node && bias_node->requires_grad) bias_node->ensure_grad();
            for (int64_t nn = 0; nn < N; ++nn)
                for (int64_t co = 0; co < Cout; ++co)
                    for (int64_t t = 0; t < L; ++t) {
                        real dy = op->grad[static_cast<size_t>((nn * Cout + co) * L + t)];
                        if (dy == 0.0) continue;
                        if (bias_node && bias_node->requires_grad)
                            bias_node->grad[static_cast<size_t>(co)] += dy;
                        for (int64_t ci = 0; ci < Cin; ++ci)
                            for (int64_t kk = 0; kk < K; ++kk) {
                                int64_t src = t - dilation * kk;
                                if (src < 0) continue;
                                size_t wi = static_cast<size_t>((co * Cin + ci) * K + kk);
                                size_t xi = static_cast<size_t>((nn * Cin + ci) * L + src);
                                if (x->requires_grad) x->grad[xi] += dy * w->value[wi];
                                if (w->requires_grad) w->grad[wi] += dy * x->value[xi];
                            }
                    }
        };
    }
    return Tensor(out);
}

Tensor conv_transpose1d(const Tensor& tx, const Tensor& tw, const Tensor& tbias, int64_t stride) {
    auto x = tx.node();
    auto w = tw.node();
    if (x->shape.size() != 3 || w->shape.size() != 3)
        tensor_fail("conv_transpose1d expects x(N,Cin,L), w(Cin,Cout,K)");
    int64_t N = x->shape[0], Cin = x->shape[1], L = x->shape[2];
    int64_t Cout = w->shape[1], K = w->shape[2];
    if (w->shape[0] != Cin)
        tensor_fail("conv_transpose1d channel mismatch: " + shape_str(x->shape) + " vs " +
                    shape_str(w->shape));
    int64_t Lout = (L - 1) * stride + K;
    bool has_bias = tbias.defined();
    bool rg = x->requires_grad || w->requires_grad || (has_bias && tbias.requires_grad());
    auto out = make_node({N, Cout, Lout}, rg);
    if (has_bias)
        for (int64_t nn = 0; nn < N; ++nn)
            for (int64_t co = 0; co < Cout; ++co)
                for (int64_t t = 0; t < Lout; ++t)
                    out->value[static_cast<size_t>((nn * Cout + co) * Lout + t)] =
                        tbias.data()[static_cast<size_t>(co)];
    for (int64_t nn = 0; nn < N; ++nn)
        for (int64_t ci = 0; ci < Cin; ++ci)
            for (int64_t t = 0; t < L; ++t) {
                real xv = x->value[static_cast<size_t>((nn * Cin + ci) * L + t)];
                if (xv == 0.0) continue;
                for (int64_t co = 0; co < Cout; ++co)
                    for (int64_t kk = 0; kk < K; ++kk)
                        out->value[static_cast<size_t>((nn * Cout + co) * Lout + t * stride + kk)] +=
                            xv * w->value[static_cast<size_t>((ci * Cout + co) * K + kk)];
            }
    if (rg) {
        out->parents = {x, w};
        if (has_bias) out->parents.push_back(tbias.node());
        Node* op = out.get();
        auto bias_node = has_bias ? tbias.node() : nullptr;
        out->backward_fn = [op, x, w, bias_node, N, Cin, Cout, L, K, Lout, stride]() {
            if (x->requires_grad) x->ensure_grad();
            if (w->requires_grad) w->ensure_grad();
            if (bias_node && bias_node->requires_grad) bias_node->ensure_grad();
            if (bias_node && bias_node->requires_grad)
                for (int64_t nn = 0; nn < N; ++nn)
                    for (int64_t co = 0; co < Cout; ++co)
                        for (int64_t t = 0; t < Lout; ++t)
                            bias_node->grad[static_cast<size_t>(co)] +=
                                op->grad[static_cast<size_t>((nn * Cout + co) * Lout + t)];
            for (int64_t nn = 0; nn < N; ++nn)
                for (int64_t ci = 0; ci < Cin; ++ci)
                    for (int64_t t = 0; t < L; ++t) {
                        size_t xi = static_cast<size_t>((nn * Cin + ci) * L + t);
                        for (int64_t co = 0; co < Cout; ++co)
                            for (int64_t kk = 0; kk < K; ++kk) {
                                size_t wi = static_cast<size_t>((ci * Cout + co) * K + kk);
                                size_t yi = static_cast<size_t>((nn * Cout + co) * Lout +
                                                                t * stride + kk);
                                if (x->requires_grad)
                                    x->grad[xi] += op->grad[yi] * w->value[wi];
                                if (w->requires_grad)
                                    w->grad[wi] += op->grad[yi] * x->value[xi];
                            }
                    }
        };
    }
    return Tensor(out);
}

// ---- misc ----

Tensor softmax(const Tensor& a, int64_t axis) {
    Tensor shifted = a - max_detached(a, axis, true);
    Tensor e = exp(shifted);
    return e / sum(e, axis, true);
}

Tensor dropout(const Tensor& a, real p, bool training, Rng& rng) {
    if (!training || p == 0.0) return a;
    if (p < 0.0 || p >= 1.0) tensor_fail("dropout probability out of range");
    std::vector<real> mask(static_cast<size_t>(a.size()));
    real keep = 1.0 - p;
    for (real& m : mask) m = rng.bernoulli(p) ? 0.0 : 1.0 / keep;
    return a * Tensor::from(a.shape(), std::move(mask));
}

}  // namespace stella
