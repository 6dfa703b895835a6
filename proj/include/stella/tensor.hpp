#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace stella {

using real = double;
using Shape = std::vector<int64_t>;

int64_t numel(const Shape& s);
std::string shape_str(const Shape& s);

// One node of the autodiff tape. Leaves hold parameters or inputs; interior
// nodes capture a backward closure that scatters gradients into parents.
struct Node {
    Shape shape;
    std::vector<real> value;
    std::vector<real> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void()> backward_fn;

    void ensure_grad();
};

class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, real v, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<real> data, bool requires_grad = false);
    static Tensor scalar(real v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int64_t dim() const { return static_cast<int64_t>(node_->shape.size()); }
    int64_t size() const { return numel(node_->shape); }
    int64_t extent(int64_t axis) const { return node_->shape[static_cast<size_t>(axis)]; }

    std::vector<real>& data() { return node_->value; }
    const std::vector<real>& data() const { return node_->value; }
    std::vector<real>& grad() { return node_->grad; }
    const std::vector<real>& grad() const { return node_->grad; }
    bool requires_grad() const { return node_->requires_grad; }
    real item() const;
    real at(std::initializer_list<int64_t> idx) const;

    // Runs reverse-mode accumulation from this (scalar) tensor.
    void backward();
    void zero_grad();
    Tensor detach() const;

    std::shared_ptr<Node> node() const { return node_; }

  private:
    std::shared_ptr<Node> node_;
};

// ---- elementwise (numpy-style broadcasting) ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor gelu(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }
inline Tensor operator+(const Tensor& a, real s) { return add(a, Tensor::scalar(s)); }
inline Tensor operator-(const Tensor& a, real s) { return sub(a, Tensor::scalar(s)); }
inline Tensor operator*(const Tensor& a, real s) { return mul(a, Tensor::scalar(s)); }
inline Tensor operator/(const Tensor& a, real s) { return div(a, Tensor::scalar(s)); }
inline Tensor operator*(real s, const Tensor& a) { return mul(Tensor::scalar(s), a); }

// ---- reductions ----
Tensor sum(const Tensor& a);                                  // scalar
Tensor sum(const Tensor& a, int64_t axis, bool keepdim = false);
Tensor mean(const Tensor& a, int64_t axis, bool keepdim = false);
Tensor mean(const Tensor& a);                                 // scalar
// Detached elementwise max along axis (no gradient); used for softmax shifting.
Tensor max_detached(const Tensor& a, int64_t axis, bool keepdim = false);

// ---- shape ----
Tensor reshape(const Tensor& a, Shape shape);
Tensor permute(const Tensor& a, const std::vector<int64_t>& perm);
Tensor slice(const Tensor& a, int64_t axis, int64_t start, int64_t len);
Tensor concat(const std::vector<Tensor>& parts, int64_t axis);

// ---- linear algebra ----
// 2-D a(m,k) x b(k,n), or batched 3-D with equal leading extents.
Tensor matmul(const Tensor& a, const Tensor& b);
// x: ...xIn, w: InxOut, optional bias: Out. Applies over the last axis.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b = Tensor());

// ---- convolutions (N, C, L layout) ----
// Causal dilated conv; output length equals input length (implicit left pad).
Tensor conv1d_causal(const Tensor& x, const Tensor& w, const Tensor& bias, int64_t dilation);
// Transposed conv, weight (Cin, Cout, K); output length (L-1)*stride + K.
Tensor conv_transpose1d(const Tensor& x, const Tensor& w, const Tensor& bias, int64_t stride);

// ---- misc ----
Tensor softmax(const Tensor& a, int64_t axis);
class Rng;
Tensor dropout(const Tensor& a, real p, bool training, Rng& rng);

[[noreturn]] void tensor_fail(const std::string& msg);

}  // namespace stella
